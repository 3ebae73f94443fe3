/*
 * Copyright 2026 The scsplit Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "scsplit/io.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>

#include <openssl/evp.h>
#include <tiffio.h>

#include "scsplit/common.hpp"

namespace scsplit {

namespace fs = std::filesystem;

std::string ReadTextFile( fs::path const& path ) {
   std::ifstream in( path, std::ios::binary );
   if( !in ) {
      Fail( ErrorCode::kIo, "cannot open " + path.string());
   }
   std::ostringstream ss;
   ss << in.rdbuf();
   return ss.str();
}

Json ReadJsonFile( fs::path const& path ) {
   std::string const text = ReadTextFile( path );
   try {
      return Json::parse( text );
   } catch( Json::parse_error const& e ) {
      Fail( ErrorCode::kConfig, path.string() + ": invalid JSON: " + e.what());
   }
}

void WriteFileAtomic( fs::path const& path, std::string_view contents ) {
   if( path.has_parent_path()) {
      fs::create_directories( path.parent_path());
   }
   fs::path tmp = path;
   tmp += ".tmp";
   {
      std::ofstream out( tmp, std::ios::binary | std::ios::trunc );
      if( !out ) {
         Fail( ErrorCode::kIo, "cannot write " + tmp.string());
      }
      out.write( contents.data(), static_cast< std::streamsize >( contents.size()));
      if( !out ) {
         Fail( ErrorCode::kIo, "write failed for " + tmp.string());
      }
   }
   std::error_code ec;
   fs::rename( tmp, path, ec );
   if( ec ) {
      Fail( ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
   }
}

void WriteJsonFile( fs::path const& path, Json const& value ) {
   WriteFileAtomic( path, value.dump( 2 ) + "\n" );
}

std::string Sha256Hex( std::string_view bytes ) {
   std::array< unsigned char, EVP_MAX_MD_SIZE > digest{};
   unsigned int length = 0;
   std::unique_ptr< EVP_MD_CTX, decltype( &EVP_MD_CTX_free ) > ctx( EVP_MD_CTX_new(), &EVP_MD_CTX_free );
   if( !ctx || EVP_DigestInit_ex( ctx.get(), EVP_sha256(), nullptr ) != 1 ||
       EVP_DigestUpdate( ctx.get(), bytes.data(), bytes.size()) != 1 ||
       EVP_DigestFinal_ex( ctx.get(), digest.data(), &length ) != 1 ) {
      Fail( ErrorCode::kIo, "SHA-256 computation failed" );
   }
   static constexpr char kHex[] = "0123456789abcdef";
   std::string out;
   out.reserve( length * 2 );
   for( unsigned int i = 0; i < length; ++i ) {
      out.push_back( kHex[ digest[ i ] >> 4 ] );
      out.push_back( kHex[ digest[ i ] & 0xF ] );
   }
   return out;
}

std::string Sha256Hex( std::span< float const > values ) {
   return Sha256Hex( std::string_view( reinterpret_cast< char const* >( values.data()), values.size_bytes()));
}

std::string JsonHash( Json const& value ) {
   return Sha256Hex( value.dump());
}

// --- npy --------------------------------------------------------------------

namespace {

template< typename S >
void ConvertTo( char const* raw, std::size_t count, float* out ) {
   for( std::size_t i = 0; i < count; ++i ) {
      S v;
      std::memcpy( &v, raw + i * sizeof( S ), sizeof( S ));
      out[ i ] = static_cast< float >( v );
   }
}

} // namespace

std::vector< Image > ReadNpyStack( fs::path const& path ) {
   std::string const bytes = ReadTextFile( path );
   if( bytes.size() < 10 || bytes.compare( 0, 6, "\x93NUMPY" ) != 0 ) {
      Fail( ErrorCode::kIo, path.string() + ": not an .npy file" );
   }
   auto const major = static_cast< unsigned char >( bytes[ 6 ] );
   std::size_t header_len = 0;
   std::size_t offset = 0;
   if( major == 1 ) {
      header_len = static_cast< unsigned char >( bytes[ 8 ] ) | ( static_cast< unsigned char >( bytes[ 9 ] ) << 8 );
      offset = 10;
   } else {
      Require( bytes.size() >= 12, ErrorCode::kIo, path.string() + ": truncated .npy header" );
      for( int i = 3; i >= 0; --i ) {
         header_len = ( header_len << 8 ) | static_cast< unsigned char >( bytes[ 8 + i ] );
      }
      offset = 12;
   }
   Require( bytes.size() >= offset + header_len, ErrorCode::kIo, path.string() + ": truncated .npy header" );
   std::string const header = bytes.substr( offset, header_len );
   std::smatch m;
   if( !std::regex_search( header, m, std::regex( R"('descr'\s*:\s*'([<>|=])([fiu])(\d+)')" ))) {
      Fail( ErrorCode::kIo, path.string() + ": missing dtype" );
   }
   char const order = m[ 1 ].str()[ 0 ];
   char const kind = m[ 2 ].str()[ 0 ];
   int const width = std::stoi( m[ 3 ].str());
   Require( order != '>', ErrorCode::kIo, path.string() + ": big-endian arrays are not supported" );
   if( std::regex_search( header, std::regex( R"('fortran_order'\s*:\s*True)" ))) {
      Fail( ErrorCode::kIo, path.string() + ": Fortran-ordered arrays are not supported" );
   }
   if( !std::regex_search( header, m, std::regex( R"('shape'\s*:\s*\(([^)]*)\))" ))) {
      Fail( ErrorCode::kIo, path.string() + ": missing shape" );
   }
   std::vector< std::size_t > shape;
   std::string const dims = m[ 1 ].str();
   std::regex const digits( R"(\d+)" );
   for( std::sregex_iterator it( dims.begin(), dims.end(), digits ), end; it != end; ++it ) {
      shape.push_back( std::stoul( it->str()));
   }
   if( shape.size() == 2 ) {
      shape.insert( shape.begin(), 1 );
   }
   Require( shape.size() == 3, ErrorCode::kIo, path.string() + ": expected a 2-D or 3-D array" );
   std::size_t const n = shape[ 0 ], h = shape[ 1 ], w = shape[ 2 ];
   std::size_t const itemsize = static_cast< std::size_t >( width );
   std::size_t const data_offset = offset + header_len;
   Require( bytes.size() >= data_offset + n * h * w * itemsize, ErrorCode::kIo, path.string() + ": truncated data" );
   char const* raw = bytes.data() + data_offset;
   std::vector< Image > frames;
   frames.reserve( n );
   for( std::size_t i = 0; i < n; ++i ) {
      Image img( static_cast< int >( h ), static_cast< int >( w ));
      char const* src = raw + i * h * w * itemsize;
      std::size_t const count = h * w;
      if( kind == 'f' && width == 4 ) {
         ConvertTo< float >( src, count, img.data());
      } else if( kind == 'f' && width == 8 ) {
         ConvertTo< double >( src, count, img.data());
      } else if( kind == 'u' && width == 1 ) {
         ConvertTo< std::uint8_t >( src, count, img.data());
      } else if( kind == 'u' && width == 2 ) {
         ConvertTo< std::uint16_t >( src, count, img.data());
      } else if( kind == 'u' && width == 4 ) {
         ConvertTo< std::uint32_t >( src, count, img.data());
      } else if( kind == 'i' && width == 1 ) {
         ConvertTo< std::int8_t >( src, count, img.data());
      } else if( kind == 'i' && width == 2 ) {
         ConvertTo< std::int16_t >( src, count, img.data());
      } else if( kind == 'i' && width == 4 ) {
         ConvertTo< std::int32_t >( src, count, img.data());
      } else {
         Fail( ErrorCode::kIo, path.string() + ": unsupported dtype" );
      }
      frames.push_back( std::move( img ));
   }
   return frames;
}

void WriteNpyStack( fs::path const& path, std::span< Image const > frames ) {
   Require( !frames.empty(), ErrorCode::kShape, "cannot write an empty stack" );
   for( auto const& f : frames ) {
      RequireSameShape( f, frames[ 0 ], "npy stack" );
   }
   std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + std::to_string( frames.size()) +
                        ", " + std::to_string( frames[ 0 ].height()) + ", " + std::to_string( frames[ 0 ].width()) +
                        "), }";
   std::size_t const total = 10 + header.size() + 1;
   header.append(( 64 - total % 64 ) % 64, ' ' );
   header.push_back( '\n' );
   std::string out = "\x93NUMPY";
   out.push_back( '\x01' );
   out.push_back( '\x00' );
   out.push_back( static_cast< char >( header.size() & 0xFF ));
   out.push_back( static_cast< char >(( header.size() >> 8 ) & 0xFF ));
   out += header;
   for( auto const& f : frames ) {
      out.append( reinterpret_cast< char const* >( f.data()), f.size() * sizeof( float ));
   }
   WriteFileAtomic( path, out );
}

// --- TIFF -------------------------------------------------------------------

namespace {

struct TiffCloser {
   void operator()( TIFF* t ) const { TIFFClose( t ); }
};
using TiffHandle = std::unique_ptr< TIFF, TiffCloser >;

void SilenceTiffWarnings() {
   static bool const once = [] {
      TIFFSetWarningHandler( nullptr );
      return true;
   }();
   (void)once;
}

template< typename S >
float Sample( unsigned char const* row, std::size_t index ) {
   S v;
   std::memcpy( &v, row + index * sizeof( S ), sizeof( S ));
   return static_cast< float >( v );
}

} // namespace

std::vector< TiffPage > ReadTiffPages( fs::path const& path ) {
   SilenceTiffWarnings();
   TiffHandle tif( TIFFOpen( path.c_str(), "r" ));
   if( !tif ) {
      Fail( ErrorCode::kIo, "cannot open TIFF " + path.string());
   }
   std::vector< TiffPage > pages;
   do {
      std::uint32_t w = 0, h = 0;
      std::uint16_t spp = 1, bps = 0, fmt = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
      TIFFGetField( tif.get(), TIFFTAG_IMAGEWIDTH, &w );
      TIFFGetField( tif.get(), TIFFTAG_IMAGELENGTH, &h );
      TIFFGetFieldDefaulted( tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp );
      TIFFGetFieldDefaulted( tif.get(), TIFFTAG_BITSPERSAMPLE, &bps );
      TIFFGetFieldDefaulted( tif.get(), TIFFTAG_SAMPLEFORMAT, &fmt );
      TIFFGetFieldDefaulted( tif.get(), TIFFTAG_PLANARCONFIG, &planar );
      Require( w > 0 && h > 0, ErrorCode::kIo, path.string() + ": empty TIFF page" );
      Require( bps == 8 || bps == 16 || bps == 32 || bps == 64, ErrorCode::kIo,
               path.string() + ": unsupported bits per sample " + std::to_string( bps ));
      TiffPage page;
      page.channels.assign( spp, Image( static_cast< int >( h ), static_cast< int >( w )));
      std::vector< unsigned char > buf( static_cast< std::size_t >( TIFFScanlineSize( tif.get())));
      int const planes = planar == PLANARCONFIG_SEPARATE ? spp : 1;
      int const per_row = planar == PLANARCONFIG_SEPARATE ? 1 : spp;
      for( int plane = 0; plane < planes; ++plane ) {
         for( std::uint32_t r = 0; r < h; ++r ) {
            if( TIFFReadScanline( tif.get(), buf.data(), r, static_cast< std::uint16_t >( plane )) < 0 ) {
               Fail( ErrorCode::kIo, path.string() + ": failed to read scanline" );
            }
            for( std::uint32_t c = 0; c < w; ++c ) {
               for( int s = 0; s < per_row; ++s ) {
                  std::size_t const idx = static_cast< std::size_t >( c ) * per_row + s;
                  float v = 0.0f;
                  if( fmt == SAMPLEFORMAT_IEEEFP ) {
                     v = bps == 32 ? Sample< float >( buf.data(), idx ) : Sample< double >( buf.data(), idx );
                  } else if( fmt == SAMPLEFORMAT_INT ) {
                     v = bps == 8 ? Sample< std::int8_t >( buf.data(), idx )
                       : bps == 16 ? Sample< std::int16_t >( buf.data(), idx )
                                   : Sample< std::int32_t >( buf.data(), idx );
                  } else {
                     v = bps == 8 ? Sample< std::uint8_t >( buf.data(), idx )
                       : bps == 16 ? Sample< std::uint16_t >( buf.data(), idx )
                                   : Sample< std::uint32_t >( buf.data(), idx );
                  }
                  page.channels[ static_cast< std::size_t >( plane + s ) ]( static_cast< int >( r ), static_cast< int >( c )) = v;
               }
            }
         }
      }
      pages.push_back( std::move( page ));
   } while( TIFFReadDirectory( tif.get()));
   return pages;
}

void WriteTiffStack( fs::path const& path, std::span< Image const > frames ) {
   SilenceTiffWarnings();
   if( path.has_parent_path()) {
      fs::create_directories( path.parent_path());
   }
   fs::path tmp = path;
   tmp += ".tmp";
   {
      TiffHandle tif( TIFFOpen( tmp.c_str(), "w" ));
      if( !tif ) {
         Fail( ErrorCode::kIo, "cannot create TIFF " + tmp.string());
      }
      for( auto const& f : frames ) {
         TIFFSetField( tif.get(), TIFFTAG_IMAGEWIDTH, static_cast< std::uint32_t >( f.width()));
         TIFFSetField( tif.get(), TIFFTAG_IMAGELENGTH, static_cast< std::uint32_t >( f.height()));
         TIFFSetField( tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast< std::uint16_t >( 1 ));
         TIFFSetField( tif.get(), TIFFTAG_BITSPERSAMPLE, static_cast< std::uint16_t >( 32 ));
         TIFFSetField( tif.get(), TIFFTAG_SAMPLEFORMAT, static_cast< std::uint16_t >( SAMPLEFORMAT_IEEEFP ));
         TIFFSetField( tif.get(), TIFFTAG_PLANARCONFIG, static_cast< std::uint16_t >( PLANARCONFIG_CONTIG ));
         TIFFSetField( tif.get(), TIFFTAG_PHOTOMETRIC, static_cast< std::uint16_t >( PHOTOMETRIC_MINISBLACK ));
         TIFFSetField( tif.get(), TIFFTAG_ROWSPERSTRIP, static_cast< std::uint32_t >( f.height()));
         std::vector< float > row( static_cast< std::size_t >( f.width()));
         for( int r = 0; r < f.height(); ++r ) {
            std::copy_n( f.data() + static_cast< std::size_t >( r ) * f.width(), f.width(), row.data());
            if( TIFFWriteScanline( tif.get(), row.data(), static_cast< std::uint32_t >( r ), 0 ) < 0 ) {
               Fail( ErrorCode::kIo, "failed to write TIFF scanline" );
            }
         }
         TIFFWriteDirectory( tif.get());
      }
   }
   std::error_code ec;
   fs::rename( tmp, path, ec );
   if( ec ) {
      Fail( ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
   }
}

} // namespace scsplit

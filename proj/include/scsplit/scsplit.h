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

/*
 * C interface to scsplit: two-channel fluorescence unmixing with
 * severity-cognizant input normalization.
 *
 * Every function returns an scs_status. On failure the message is available
 * from scs_last_error() on the same thread until the next call. Strings
 * returned through char** are owned by the caller and released with
 * scs_free_string(). Images are row-major float32; stacks are frame-major.
 */

#ifndef SCSPLIT_SCSPLIT_H
#define SCSPLIT_SCSPLIT_H

#include <stddef.h>
#include <stdint.h>

#if defined( _WIN32 )
#  define SCS_API __declspec( dllexport )
#else
#  define SCS_API __attribute__(( visibility( "default" )))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scs_status {
   SCS_OK = 0,
   SCS_ERR_CONFIG = 1,
   SCS_ERR_IO = 2,
   SCS_ERR_INGEST = 3,
   SCS_ERR_SHAPE = 4,
   SCS_ERR_FINGERPRINT = 5,
   SCS_ERR_DIVERGED = 6,
   SCS_ERR_STATE = 7,
   SCS_ERR_RANGE = 8,
   SCS_ERR_ARGUMENT = 64,   /* null pointer or invalid handle */
   SCS_ERR_INTERNAL = 99
} scs_status;

typedef struct scs_dataset scs_dataset;
typedef struct scs_table scs_table;
typedef struct scs_bundle scs_bundle;

/* Called with one JSON event per progress step. */
typedef void ( *scs_progress_fn )( char const* event_json, void* user );

SCS_API char const* scs_version( void );
SCS_API char const* scs_status_name( scs_status status );
/* Message of the last failed call on this thread, "" when none. */
SCS_API char const* scs_last_error( void );
SCS_API void scs_free_string( char* s );

/* --- Commands ------------------------------------------------------------- */

/* Space-separated list of command names. */
SCS_API char const* scs_command_names( void );

/* Resolves the effective run config: file values (config_path may be NULL)
 * patched with overrides_json (may be NULL). */
SCS_API scs_status scs_effective_config( char const* config_path, char const* overrides_json, char** out_json );

/* Runs synth, build-scin, train, infer, eval, sweep or run. The summary of
 * written artifacts is returned in result_json (may be NULL). */
SCS_API scs_status scs_run_command( char const* command, char const* config_path, char const* overrides_json,
                                    scs_progress_fn progress, void* user, char** result_json );

/* --- Datasets ------------------------------------------------------------- */

SCS_API scs_status scs_dataset_synthesize( char const* synth_json, scs_dataset** out );
/* clip_quantile outside (0, 1] disables clipping. */
SCS_API scs_status scs_dataset_load( char const* path, double clip_quantile, scs_dataset** out );
SCS_API void scs_dataset_free( scs_dataset* ds );
/* {"name", "frames", "height", "width", "splits": [...], "fingerprint"} */
SCS_API scs_status scs_dataset_info( scs_dataset const* ds, char** out_json );
/* Copies height*width pixels of one channel of one frame into out. */
SCS_API scs_status scs_dataset_frame( scs_dataset const* ds, size_t index, int channel, float* out );

/* --- Mixing and normalization --------------------------------------------- */

/* out = (1 - t) c0 + t c1 over n pixels. */
SCS_API scs_status scs_mix( float const* c0, float const* c1, size_t n, double t, float* out );

SCS_API scs_status scs_table_build( scs_dataset const* ds, char const* options_json, scs_table** out );
SCS_API scs_status scs_table_load( char const* path, scs_table** out );
SCS_API scs_status scs_table_save( scs_table const* table, char const* path );
SCS_API void scs_table_free( scs_table* table );
SCS_API scs_status scs_table_json( scs_table const* table, char** out_json );
SCS_API scs_status scs_table_bin_index( scs_table const* table, double t, int* out );
SCS_API scs_status scs_table_normalize( scs_table const* table, double t, float const* in, int height, int width, float* out );
SCS_API scs_status scs_table_denormalize( scs_table const* table, double t, float const* in, int height, int width, float* out );
SCS_API scs_status scs_table_predict_variance( scs_table const* table, double t, double* out );

/* --- Models --------------------------------------------------------------- */

SCS_API scs_status scs_bundle_load( char const* dir, scs_bundle** out );
SCS_API void scs_bundle_free( scs_bundle* bundle );
SCS_API scs_status scs_bundle_manifest( scs_bundle const* bundle, char** out_json );

/* Estimates the mixing ratio of an acquisition of n_frames frames.
 * infer_json may be NULL for defaults. */
SCS_API scs_status scs_estimate_t( scs_bundle const* bundle, float const* frames, size_t n_frames, int height,
                                   int width, char const* infer_json, double* t_estimate );

/* Unmixes an acquisition. c0_out and c1_out hold n_frames*height*width
 * floats each (either may be NULL to skip that channel). result_json (may be
 * NULL) receives {t_estimate, frame_t, per_patch_t, config}. */
SCS_API scs_status scs_unmix( scs_bundle const* bundle, float const* frames, size_t n_frames, int height, int width,
                              char const* infer_json, float* c0_out, float* c1_out, double* t_estimate,
                              char** result_json );

#ifdef __cplusplus
}
#endif

#endif /* SCSPLIT_SCSPLIT_H */

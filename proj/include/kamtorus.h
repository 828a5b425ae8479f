/*
 * kamtorus C API: run configuration handles, batch commands and Fourier-model
 * access behind a stable extern-C surface. All functions return status codes;
 * kam_last_error() describes the most recent failure in the calling thread.
 */
#ifndef KAMTORUS_H
#define KAMTORUS_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct kam_config kam_config; /* opaque run configuration */
typedef struct kam_model kam_model;   /* opaque Fourier model */

typedef enum {
  KAM_OK = 0,
  KAM_E_CERTIFY_FAIL = 1, /* certificate evaluated, condition >= 1 */
  KAM_E_DIVERGED = 2,     /* solver did not converge */
  KAM_E_CONFIG = 3,       /* configuration or input error */
  KAM_E_INVALID = 4,      /* bad argument to an API call */
  KAM_E_IO = 5,
  KAM_E_INTERNAL = 6
} kam_status;

const char* kam_version(void);
/* Thread-local message for the last failing call. Never NULL. */
const char* kam_last_error(void);

kam_status kam_config_open(const char* path, kam_config** out);
kam_status kam_config_parse(const char* text, kam_config** out);
kam_status kam_config_set(kam_config* cfg, const char* section, const char* key,
                          const char* value);
void kam_config_free(kam_config* cfg);

/*
 * Execute one batch command: "solve", "certify", "lift", "bench" or
 * "constants". Artifacts are written under out_dir; torus_path names the
 * input parameterization for certify/lift (NULL otherwise). The return value
 * is the documented exit code: 0 success/converged/pass, 1 certificate fail,
 * 2 solver divergence, 3 configuration error.
 */
int kam_run(kam_config* cfg, const char* command, const char* out_dir, const char* torus_path,
            unsigned seed, int threads);

kam_status kam_model_load(const char* path, kam_model** out);
kam_status kam_model_save_csv(const kam_model* m, const char* path);
kam_status kam_model_save_fmd(const kam_model* m, const char* path);
kam_status kam_model_info(const kam_model* m, int* dim, int* rows, int* cols);
/* Evaluate the truncated series at an angle theta (dim entries); writes
 * rows*cols doubles in row-major order. */
kam_status kam_model_eval(const kam_model* m, const double* theta, double* values);
void kam_model_free(kam_model* m);

#ifdef __cplusplus
}
#endif

#endif /* KAMTORUS_H */

#ifndef VADELTA_VADELTA_H
#define VADELTA_VADELTA_H

#include <stddef.h>
#include <stdint.h>

#if defined(VADELTA_BUILDING_LIBRARY)
#define VD_API __attribute__((visibility("default")))
#else
#define VD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vd_status {
  VD_OK = 0,
  VD_ERR_INVALID_ARGUMENT = 1,
  VD_ERR_CONFIG = 2,
  VD_ERR_IO = 3,
  VD_ERR_NUMERIC = 4,
  VD_ERR_INTERNAL = 5
} vd_status;

typedef struct vd_config vd_config;
typedef struct vd_portfolio vd_portfolio;
typedef struct vd_model vd_model;
typedef struct vd_report vd_report;

/* Message of the last failure on the calling thread ("" if none). */
VD_API const char* vd_last_error(void);
VD_API const char* vd_version(void);
/* Frees strings returned through char** out-parameters. */
VD_API void vd_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

/* preset: "paper" or "desk"; NULL means "paper". */
VD_API vd_status vd_config_preset(const char* preset, vd_config** out);
VD_API vd_status vd_config_load(const char* path, vd_config** out);
VD_API vd_status vd_config_parse(const char* json, vd_config** out);
/* "dotted.key=value"; the value is parsed as JSON when it can be. */
VD_API vd_status vd_config_set(vd_config* cfg, const char* assignment);
VD_API vd_status vd_config_to_json(const vd_config* cfg, char** out);
VD_API vd_status vd_config_output_dir(const vd_config* cfg, char** out);
VD_API void vd_config_free(vd_config* cfg);

/* ---- portfolios ------------------------------------------------------- */

/* which: "input", "representatives", "training" or "validation". Draws use
 * the config's master seed; `draw` selects an independent realization.
 * Validation portfolios are drawn from the input portfolio. */
VD_API vd_status vd_portfolio_draw(const vd_config* cfg, const char* which,
                                   size_t draw, vd_portfolio** out);
/* results_csv may be NULL; otherwise its deltas are attached by id. */
VD_API vd_status vd_portfolio_load(const char* portfolio_csv,
                                   const char* results_csv,
                                   vd_portfolio** out);
VD_API vd_status vd_portfolio_save(const vd_portfolio* p, const char* path);
/* Writes id,liability,delta,std_err; fails if the portfolio has no deltas. */
VD_API vd_status vd_portfolio_save_results(const vd_portfolio* p,
                                           const char* path);
VD_API size_t vd_portfolio_size(const vd_portfolio* p);
VD_API int vd_portfolio_has_deltas(const vd_portfolio* p);
VD_API vd_status vd_portfolio_delta(const vd_portfolio* p, size_t i,
                                    double* out);
VD_API vd_status vd_portfolio_total_delta(const vd_portfolio* p, double* out);
VD_API void vd_portfolio_free(vd_portfolio* p);

/* Nested Monte Carlo valuation with the config's MC settings and mortality
 * table. Attaches deltas and standard errors; seconds may be NULL. */
VD_API vd_status vd_mc_value(const vd_config* cfg, vd_portfolio* p,
                             double* seconds);

/* ---- metamodel -------------------------------------------------------- */

/* All three portfolios must carry deltas. */
VD_API vd_status vd_model_train(const vd_config* cfg, const vd_portfolio* reps,
                                const vd_portfolio* training,
                                const vd_portfolio* validation,
                                vd_model** out);
VD_API vd_status vd_model_load(const char* path, vd_model** out);
VD_API vd_status vd_model_save(const vd_model* m, const char* path);
/* iteration,train_mse,val_mse,mu_t; empty after vd_model_load. */
VD_API vd_status vd_model_save_history(const vd_model* m, const char* path);
VD_API size_t vd_model_iterations(const vd_model* m);
/* "none", "trend_u_shape", "rel_err_below_delta" or "max_iterations". */
VD_API const char* vd_model_stop_reason(const vd_model* m);
VD_API void vd_model_free(vd_model* m);

/* Per-policy estimates for `input`, returned as a new portfolio with
 * deltas. method: "nn" (needs model), "kriging_spherical",
 * "kriging_exponential", "idw_p<power>" or "rbf_eps<epsilon>" (need reps).
 * total may be NULL; it receives the portfolio-mode aggregate. */
VD_API vd_status vd_estimate(const vd_config* cfg, const char* method,
                             const vd_portfolio* reps, const vd_model* model,
                             const vd_portfolio* input, vd_portfolio** out,
                             double* total);

/* ---- experiments ------------------------------------------------------ */

VD_API vd_status vd_run_comparison(const vd_config* cfg, vd_report** out);
/* vary: "representatives", "training", "validation" or "sizes"; NULL and 0
 * take the config's values. */
VD_API vd_status vd_run_sensitivity(const vd_config* cfg, const char* vary,
                                    size_t realizations, vd_report** out);
/* Writes the CSV reports and manifest.json under dir (NULL: output_dir). */
VD_API vd_status vd_report_emit(const vd_config* cfg, const vd_report* r,
                                const char* dir);
/* Markdown summary of the CSV reports already in dir. */
VD_API vd_status vd_report_render(const char* dir, char** out);
VD_API void vd_report_free(vd_report* r);

#ifdef __cplusplus
}
#endif

#endif

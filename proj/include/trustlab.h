/* C interface to the trust-model library. All functions return a tl_status;
 * on failure tl_last_error() describes the problem for the calling thread.
 * Objects returned through out-parameters are owned by the caller and must
 * be released with the matching _free function. */
#ifndef TRUSTLAB_H
#define TRUSTLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tl_status {
  TL_OK = 0,
  TL_ERR_INVALID_ARGUMENT = 1,
  TL_ERR_IO = 2,
  TL_ERR_RUNTIME = 3
} tl_status;

/* message of the most recent failure on this thread; never NULL */
const char* tl_last_error(void);

typedef struct tl_embeddings tl_embeddings;
typedef struct tl_dataset tl_dataset;
typedef struct tl_model tl_model;

/* ---- task features ---- */

/* GloVe-format text file: token followed by decimals, one entry per line */
tl_status tl_embeddings_load(const char* path, tl_embeddings** out);
void tl_embeddings_free(tl_embeddings* e);
int tl_embeddings_dim(const tl_embeddings* e);

/* Embed every catalog task description and write an "id v1 ... vD" feature
 * file. The catalog is tab-separated with an id/domain/category/difficulty/
 * description header. */
tl_status tl_embed_catalog(const tl_embeddings* e, const char* catalog_path,
                           const char* features_path);

/* Mean word vector of one free-text description; out must hold
 * tl_embeddings_dim(e) doubles. */
tl_status tl_embeddings_embed(const tl_embeddings* e, const char* description,
                              double* out);

/* ---- datasets ---- */

/* features_path may be NULL to load responses without task features */
tl_status tl_dataset_load(const char* dataset_path, const char* features_path,
                          tl_dataset** out);
/* config_json keys (all optional): n_participants, n_tasks, n_groups, seed,
 * noise, feature_dim, success_shift, failure_shift */
tl_status tl_dataset_generate(const char* config_json, tl_dataset** out);
tl_status tl_dataset_save(const tl_dataset* d, const char* dataset_path,
                          const char* features_path);
int tl_dataset_num_records(const tl_dataset* d);
int tl_dataset_num_tasks(const tl_dataset* d);
/* Dimension of the attached task features, or 0 when none are attached. */
int tl_dataset_feature_dim(const tl_dataset* d);
void tl_dataset_free(tl_dataset* d);

/* ---- models ---- */

/* kind: gp | pmgp | pogp | rnn | gpnn | lg | ct.
 * config_json keys (all optional): feature_dim, gp_latent_dim, max_basis,
 * task_embed_dim, task_hidden, perf_embed_dim, gru_layers, residual_hidden,
 * lengthscales. Parameters are initialized from the seed. */
tl_status tl_model_create(const char* kind, const char* config_json,
                          uint64_t seed, tl_model** out);
tl_status tl_model_load(const char* checkpoint_path, tl_model** out);
tl_status tl_model_save(const tl_model* m, const char* checkpoint_path);
const char* tl_model_kind(const tl_model* m);
void tl_model_free(tl_model* m);

/* train_config_json keys (all optional): learning_rate, max_epochs,
 * validation_fraction, patience, seed. Final parameters are the
 * best-validation ones. log_path (optional, may be NULL) receives a
 * tab-separated per-epoch loss table. */
tl_status tl_model_train(tl_model* m, const tl_dataset* d,
                         const char* train_config_json, const char* log_path);

/* Trust in `task_id` for the named participant after rolling the first
 * n_observations (0, 1, or 2) of that participant's session. */
tl_status tl_model_predict(const tl_model* m, const tl_dataset* d,
                           const char* participant_id, const char* task_id,
                           int n_observations, double* trust_out);

/* Trust in a task given raw feature vectors. history_features holds
 * n_history vectors of feature_dim doubles laid end to end; outcomes holds
 * one value in [-1, +1] per history entry. */
tl_status tl_model_predict_features(const tl_model* m,
                                    const double* history_features,
                                    const double* outcomes, int n_history,
                                    const double* task_features,
                                    int feature_dim, double* trust_out);

/* Finite-difference check of the analytic gradients on a small synthetic
 * batch; writes the worst relative error over all parameter blocks. When
 * report_path is not NULL a per-block tab-separated table is written. */
tl_status tl_model_gradcheck(const char* kind, uint64_t seed,
                             const char* report_path, double* max_rel_err_out);

/* ---- evaluation ---- */

/* protocol: "e1" (held-out participants) or "e2" (held-out tasks).
 * config_json keys (all optional): models (array of kind strings), seed,
 * jobs, n_folds, model (model config object), train (train config object).
 * Writes the summary table to report_path and, when detail_path is not
 * NULL, the per-fold table to detail_path. */
tl_status tl_evaluate(const tl_dataset* d, const char* protocol,
                      const char* config_json, const char* report_path,
                      const char* detail_path);

/* Rebuild the summary table (means, standard errors, difference from best)
 * from a per-fold detail file previously written by tl_evaluate. */
tl_status tl_report_from_detail(const char* detail_path,
                                const char* report_path);

#ifdef __cplusplus
}
#endif

#endif /* TRUSTLAB_H */

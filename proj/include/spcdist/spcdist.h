/* C interface to the spcdist library.
 *
 * All objects are opaque handles released with their *_free function.
 * Functions return an spcdist_status; on failure spcdist_last_error()
 * describes the problem (thread-local, valid until the next call on the
 * same thread). */
#ifndef SPCDIST_SPCDIST_H
#define SPCDIST_SPCDIST_H

#include <stddef.h>
#include <stdint.h>

#if defined(SPCDIST_BUILDING_LIBRARY)
#define SPCDIST_API __attribute__((visibility("default")))
#else
#define SPCDIST_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum spcdist_status {
    SPCDIST_OK = 0,
    SPCDIST_ERR_INVALID_ARGUMENT = 1,
    SPCDIST_ERR_VALIDATION = 2,
    SPCDIST_ERR_NUMERIC = 3,
    SPCDIST_ERR_IO = 4,
    SPCDIST_ERR_INTERNAL = 5
} spcdist_status;

typedef enum spcdist_method {
    SPCDIST_METHOD_SPC = 0,
    SPCDIST_METHOD_SS = 1,
    SPCDIST_METHOD_EUCL = 2
} spcdist_method;

typedef struct spcdist_dataset spcdist_dataset;
typedef struct spcdist_matrix spcdist_matrix;
typedef struct spcdist_clustering spcdist_clustering;
typedef struct spcdist_report spcdist_report;

typedef struct spcdist_reml_result {
    double lambda_hat;
    double sigma2_hat;
    double sigma_u2_hat;
    double reml_value;
} spcdist_reml_result;

typedef struct spcdist_sim_config {
    uint64_t seed;
    size_t replicates;
    size_t series_per_cell;
    size_t grid_size;
    double noise_scale;
} spcdist_sim_config;

SPCDIST_API const char* spcdist_last_error(void);
SPCDIST_API const char* spcdist_version(void);
/* Default full-size configuration (10 series per cell, 200 time points,
 * 200 replicates, unit noise). */
SPCDIST_API void spcdist_sim_config_default(spcdist_sim_config* config);

/* ---- datasets ---------------------------------------------------------- */

/* Reads long CSV `subject,time,value`. When has_domain is zero the domain is
 * the observed time range. */
SPCDIST_API spcdist_status spcdist_dataset_read_csv(const char* path, int has_domain,
                                                    double t_lower, double t_upper,
                                                    spcdist_dataset** out);
SPCDIST_API spcdist_status spcdist_dataset_parse_csv(const char* text, size_t length,
                                                     int has_domain, double t_lower,
                                                     double t_upper, spcdist_dataset** out);
SPCDIST_API void spcdist_dataset_free(spcdist_dataset* dataset);
SPCDIST_API size_t spcdist_dataset_size(const spcdist_dataset* dataset);
SPCDIST_API const char* spcdist_dataset_subject_id(const spcdist_dataset* dataset, size_t index);
SPCDIST_API size_t spcdist_dataset_subject_length(const spcdist_dataset* dataset, size_t index);
SPCDIST_API spcdist_status spcdist_dataset_domain(const spcdist_dataset* dataset,
                                                  double* t_lower, double* t_upper);

/* ---- smoothing splines ------------------------------------------------- */

SPCDIST_API spcdist_status spcdist_select_lambda(const spcdist_dataset* dataset, size_t subject,
                                                 spcdist_reml_result* out);
/* Fits subject at lambda and evaluates the curve at m points (each inside
 * the domain), writing m values to out_values. */
SPCDIST_API spcdist_status spcdist_fit_evaluate(const spcdist_dataset* dataset, size_t subject,
                                                double lambda, const double* times, size_t m,
                                                double* out_values);

/* ---- dissimilarity matrices ------------------------------------------- */

/* threads = 0 uses every core; the result does not depend on it. */
SPCDIST_API spcdist_status spcdist_distance_matrix(const spcdist_dataset* dataset,
                                                   spcdist_method method, unsigned threads,
                                                   spcdist_matrix** out);
SPCDIST_API spcdist_status spcdist_matrix_read_csv(const char* path, spcdist_matrix** out);
/* comment, when not NULL, is written as leading '#' lines (split on '\n').
 * Every writer treats the path "-" as standard output. */
SPCDIST_API spcdist_status spcdist_matrix_write_csv(const spcdist_matrix* matrix, const char* path,
                                                    const char* comment);
SPCDIST_API void spcdist_matrix_free(spcdist_matrix* matrix);
SPCDIST_API size_t spcdist_matrix_size(const spcdist_matrix* matrix);
SPCDIST_API const char* spcdist_matrix_id(const spcdist_matrix* matrix, size_t index);
SPCDIST_API double spcdist_matrix_get(const spcdist_matrix* matrix, size_t i, size_t j);
/* New matrix without the listed ids; unknown ids are a validation error. */
SPCDIST_API spcdist_status spcdist_matrix_exclude(const spcdist_matrix* matrix,
                                                  const char* const* ids, size_t count,
                                                  spcdist_matrix** out);

/* ---- outliers and clustering ------------------------------------------ */

/* out_scores must hold spcdist_matrix_size(matrix) values. */
SPCDIST_API spcdist_status spcdist_knn_scores(const spcdist_matrix* matrix, size_t k_neighbors,
                                              double* out_scores);
/* mode: "gap" or "threshold:<t>". out_flags receives 0/1 per score. */
SPCDIST_API spcdist_status spcdist_flag_outliers(const double* scores, size_t n, const char* mode,
                                                 int* out_flags);
/* Writes `subject,score,flagged` for the matrix ids. */
SPCDIST_API spcdist_status spcdist_write_outliers_csv(const spcdist_matrix* matrix,
                                                      const double* scores, const int* flags,
                                                      const char* path, const char* comment);

SPCDIST_API spcdist_status spcdist_pam(const spcdist_matrix* matrix, size_t k,
                                       spcdist_clustering** out);
SPCDIST_API void spcdist_clustering_free(spcdist_clustering* clustering);
SPCDIST_API double spcdist_clustering_cost(const spcdist_clustering* clustering);
/* 1-based cluster number of subject i. */
SPCDIST_API size_t spcdist_clustering_cluster(const spcdist_clustering* clustering, size_t i);
/* Index of the medoid that subject i is assigned to. */
SPCDIST_API size_t spcdist_clustering_medoid(const spcdist_clustering* clustering, size_t i);
SPCDIST_API spcdist_status spcdist_clustering_write_csv(const spcdist_clustering* clustering,
                                                        const char* path, const char* comment);

/* ---- simulation benchmark --------------------------------------------- */

SPCDIST_API spcdist_status spcdist_simulate(const spcdist_sim_config* config,
                                            const spcdist_method* methods, size_t method_count,
                                            unsigned threads, spcdist_report** out);
SPCDIST_API void spcdist_report_free(spcdist_report* report);
/* Per-cell and ALL means; raw_path (may be NULL) receives per-replicate rows. */
SPCDIST_API spcdist_status spcdist_report_write_csv(const spcdist_report* report, const char* path,
                                                    const char* raw_path, const char* comment);
/* Mean Q and R for one row; family "f1".."f4" or "ALL", noise "WN".. or "ALL". */
SPCDIST_API spcdist_status spcdist_report_lookup(const spcdist_report* report, const char* family,
                                                 const char* noise, spcdist_method method,
                                                 double* q_mean, double* r_mean);

#ifdef __cplusplus
}
#endif

#endif /* SPCDIST_SPCDIST_H */

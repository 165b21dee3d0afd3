#include "spcdist/spcdist.h"

#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <new>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spcdist/cluster.hpp"
#include "spcdist/dataset.hpp"
#include "spcdist/distance.hpp"
#include "spcdist/error.hpp"
#include "spcdist/simbench.hpp"
#include "spcdist/spline.hpp"

struct spcdist_dataset {
    spcdist::Dataset value;
};
struct spcdist_matrix {
    spcdist::DissimilarityMatrix value;
};
struct spcdist_clustering {
    spcdist::Clustering value;
};
struct spcdist_report {
    spcdist::BenchmarkReport value;
};

namespace {

thread_local std::string g_last_error;

struct InvalidArgument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const char* message) {
    if (!condition) throw InvalidArgument(message);
}

spcdist_status fail(spcdist_status status, const char* message) {
    g_last_error = message;
    return status;
}

// Runs fn and maps exceptions onto status codes.
template <typename Fn>
spcdist_status run(Fn&& fn) {
    try {
        g_last_error.clear();
        fn();
        return SPCDIST_OK;
    } catch (const InvalidArgument& e) {
        return fail(SPCDIST_ERR_INVALID_ARGUMENT, e.what());
    } catch (const spcdist::ValidationError& e) {
        return fail(SPCDIST_ERR_VALIDATION, e.what());
    } catch (const spcdist::NumericError& e) {
        return fail(SPCDIST_ERR_NUMERIC, e.what());
    } catch (const spcdist::IoError& e) {
        return fail(SPCDIST_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(SPCDIST_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SPCDIST_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SPCDIST_ERR_INTERNAL, "unknown error");
    }
}

std::vector<std::string> comment_lines(const char* comment) {
    std::vector<std::string> lines;
    if (!comment) return lines;
    std::stringstream ss(comment);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

// "-" writes to standard output.
template <typename Writer>
void write_output(const char* path, Writer&& writer) {
    if (std::string_view(path) == "-") {
        writer(std::cout);
        std::cout.flush();
        if (!std::cout) throw spcdist::IoError("failed writing to standard output");
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw spcdist::IoError(std::string("cannot write '") + path + "'");
    writer(out);
    out.flush();
    if (!out) throw spcdist::IoError(std::string("failed writing '") + path + "'");
}

spcdist::DistanceMethod to_method(spcdist_method m) {
    switch (m) {
        case SPCDIST_METHOD_SPC: return spcdist::DistanceMethod::spc;
        case SPCDIST_METHOD_SS: return spcdist::DistanceMethod::ss;
        case SPCDIST_METHOD_EUCL: return spcdist::DistanceMethod::eucl;
    }
    throw InvalidArgument("unknown distance method");
}

std::optional<spcdist::Domain> to_domain(int has_domain, double lo, double hi) {
    if (!has_domain) return std::nullopt;
    return spcdist::Domain{lo, hi};
}

}  // namespace

extern "C" {

SPCDIST_API const char* spcdist_last_error(void) { return g_last_error.c_str(); }

SPCDIST_API const char* spcdist_version(void) { return "0.1.0"; }

SPCDIST_API void spcdist_sim_config_default(spcdist_sim_config* config) {
    if (!config) return;
    spcdist::SimConfig d;
    config->seed = d.seed;
    config->replicates = d.replicates;
    config->series_per_cell = d.series_per_cell;
    config->grid_size = d.grid_size;
    config->noise_scale = d.noise_scale;
}

SPCDIST_API spcdist_status spcdist_dataset_read_csv(const char* path, int has_domain,
                                                    double t_lower, double t_upper,
                                                    spcdist_dataset** out) {
    return run([&] {
        require(path && out, "null argument");
        *out = nullptr;
        auto ds = spcdist::read_long_csv(path, to_domain(has_domain, t_lower, t_upper));
        *out = new spcdist_dataset{std::move(ds)};
    });
}

SPCDIST_API spcdist_status spcdist_dataset_parse_csv(const char* text, size_t length,
                                                     int has_domain, double t_lower,
                                                     double t_upper, spcdist_dataset** out) {
    return run([&] {
        require((text || length == 0) && out, "null argument");
        *out = nullptr;
        std::istringstream in(std::string(text ? text : "", length));
        auto ds = spcdist::parse_long_csv(in, to_domain(has_domain, t_lower, t_upper));
        *out = new spcdist_dataset{std::move(ds)};
    });
}

SPCDIST_API void spcdist_dataset_free(spcdist_dataset* dataset) { delete dataset; }

SPCDIST_API size_t spcdist_dataset_size(const spcdist_dataset* dataset) {
    return dataset ? dataset->value.size() : 0;
}

SPCDIST_API const char* spcdist_dataset_subject_id(const spcdist_dataset* dataset, size_t index) {
    if (!dataset || index >= dataset->value.size()) return nullptr;
    return dataset->value.subjects[index].id.c_str();
}

SPCDIST_API size_t spcdist_dataset_subject_length(const spcdist_dataset* dataset, size_t index) {
    if (!dataset || index >= dataset->value.size()) return 0;
    return dataset->value.subjects[index].size();
}

SPCDIST_API spcdist_status spcdist_dataset_domain(const spcdist_dataset* dataset, double* t_lower,
                                                  double* t_upper) {
    return run([&] {
        require(dataset && t_lower && t_upper, "null argument");
        *t_lower = dataset->value.domain.lower;
        *t_upper = dataset->value.domain.upper;
    });
}

SPCDIST_API spcdist_status spcdist_select_lambda(const spcdist_dataset* dataset, size_t subject,
                                                 spcdist_reml_result* out) {
    return run([&] {
        require(dataset && out, "null argument");
        require(subject < dataset->value.size(), "subject index out of range");
        auto sel = spcdist::select_lambda_reml(dataset->value.subjects[subject], dataset->value.domain);
        *out = {sel.lambda_hat, sel.sigma2_hat, sel.sigma_u2_hat, sel.reml_value};
    });
}

SPCDIST_API spcdist_status spcdist_fit_evaluate(const spcdist_dataset* dataset, size_t subject,
                                                double lambda, const double* times, size_t m,
                                                double* out_values) {
    return run([&] {
        require(dataset && (m == 0 || (times && out_values)), "null argument");
        require(subject < dataset->value.size(), "subject index out of range");
        auto fit = spcdist::fit_given_lambda(dataset->value.subjects[subject], lambda,
                                             dataset->value.domain);
        for (size_t i = 0; i < m; ++i) out_values[i] = spcdist::evaluate(fit, times[i]);
    });
}

SPCDIST_API spcdist_status spcdist_distance_matrix(const spcdist_dataset* dataset,
                                                   spcdist_method method, unsigned threads,
                                                   spcdist_matrix** out) {
    return run([&] {
        require(dataset && out, "null argument");
        *out = nullptr;
        auto m = spcdist::distance_matrix(dataset->value, to_method(method), threads);
        *out = new spcdist_matrix{std::move(m)};
    });
}

SPCDIST_API spcdist_status spcdist_matrix_read_csv(const char* path, spcdist_matrix** out) {
    return run([&] {
        require(path && out, "null argument");
        *out = nullptr;
        *out = new spcdist_matrix{spcdist::read_matrix_csv(path)};
    });
}

SPCDIST_API spcdist_status spcdist_matrix_write_csv(const spcdist_matrix* matrix, const char* path,
                                                    const char* comment) {
    return run([&] {
        require(matrix && path, "null argument");
        write_output(path, [&](std::ostream& os) {
            spcdist::write_matrix_csv(os, matrix->value, comment_lines(comment));
        });
    });
}

SPCDIST_API void spcdist_matrix_free(spcdist_matrix* matrix) { delete matrix; }

SPCDIST_API size_t spcdist_matrix_size(const spcdist_matrix* matrix) {
    return matrix ? matrix->value.size() : 0;
}

SPCDIST_API const char* spcdist_matrix_id(const spcdist_matrix* matrix, size_t index) {
    if (!matrix || index >= matrix->value.size()) return nullptr;
    return matrix->value.ids()[index].c_str();
}

SPCDIST_API double spcdist_matrix_get(const spcdist_matrix* matrix, size_t i, size_t j) {
    if (!matrix || i >= matrix->value.size() || j >= matrix->value.size())
        return std::numeric_limits<double>::quiet_NaN();
    return matrix->value(i, j);
}

SPCDIST_API spcdist_status spcdist_matrix_exclude(const spcdist_matrix* matrix,
                                                  const char* const* ids, size_t count,
                                                  spcdist_matrix** out) {
    return run([&] {
        require(matrix && out && (count == 0 || ids), "null argument");
        *out = nullptr;
        std::vector<std::string> drop;
        for (size_t i = 0; i < count; ++i) {
            require(ids[i] != nullptr, "null id");
            drop.emplace_back(ids[i]);
        }
        *out = new spcdist_matrix{matrix->value.without(drop)};
    });
}

SPCDIST_API spcdist_status spcdist_knn_scores(const spcdist_matrix* matrix, size_t k_neighbors,
                                              double* out_scores) {
    return run([&] {
        require(matrix && out_scores, "null argument");
        auto scores = spcdist::knn_outlier_scores(matrix->value, k_neighbors);
        std::copy(scores.begin(), scores.end(), out_scores);
    });
}

SPCDIST_API spcdist_status spcdist_flag_outliers(const double* scores, size_t n, const char* mode,
                                                 int* out_flags) {
    return run([&] {
        require(mode && (n == 0 || (scores && out_flags)), "null argument");
        std::vector<double> s(scores, scores + n);
        std::vector<std::string> ids(n);
        auto report = spcdist::flag_outliers(ids, s, spcdist::parse_flag_rule(mode));
        for (size_t i = 0; i < n; ++i) out_flags[i] = report.flagged[i] ? 1 : 0;
    });
}

SPCDIST_API spcdist_status spcdist_write_outliers_csv(const spcdist_matrix* matrix,
                                                      const double* scores, const int* flags,
                                                      const char* path, const char* comment) {
    return run([&] {
        require(matrix && scores && flags && path, "null argument");
        spcdist::OutlierReport report;
        const size_t n = matrix->value.size();
        report.ids = matrix->value.ids();
        report.scores.assign(scores, scores + n);
        for (size_t i = 0; i < n; ++i) report.flagged.push_back(flags[i] != 0);
        write_output(path, [&](std::ostream& os) {
            spcdist::write_outlier_csv(os, report, comment_lines(comment));
        });
    });
}

SPCDIST_API spcdist_status spcdist_pam(const spcdist_matrix* matrix, size_t k,
                                       spcdist_clustering** out) {
    return run([&] {
        require(matrix && out, "null argument");
        *out = nullptr;
        *out = new spcdist_clustering{spcdist::pam(matrix->value, k)};
    });
}

SPCDIST_API void spcdist_clustering_free(spcdist_clustering* clustering) { delete clustering; }

SPCDIST_API double spcdist_clustering_cost(const spcdist_clustering* clustering) {
    return clustering ? clustering->value.total_cost : std::numeric_limits<double>::quiet_NaN();
}

SPCDIST_API size_t spcdist_clustering_cluster(const spcdist_clustering* clustering, size_t i) {
    if (!clustering || i >= clustering->value.ids.size()) return 0;
    return clustering->value.cluster_of(i);
}

SPCDIST_API size_t spcdist_clustering_medoid(const spcdist_clustering* clustering, size_t i) {
    if (!clustering || i >= clustering->value.ids.size()) return static_cast<size_t>(-1);
    return clustering->value.assignment[i];
}

SPCDIST_API spcdist_status spcdist_clustering_write_csv(const spcdist_clustering* clustering,
                                                        const char* path, const char* comment) {
    return run([&] {
        require(clustering && path, "null argument");
        write_output(path, [&](std::ostream& os) {
            spcdist::write_clustering_csv(os, clustering->value, comment_lines(comment));
        });
    });
}

SPCDIST_API spcdist_status spcdist_simulate(const spcdist_sim_config* config,
                                            const spcdist_method* methods, size_t method_count,
                                            unsigned threads, spcdist_report** out) {
    return run([&] {
        require(config && methods && out, "null argument");
        *out = nullptr;
        spcdist::SimConfig c;
        c.seed = config->seed;
        c.replicates = config->replicates;
        c.series_per_cell = config->series_per_cell;
        c.grid_size = config->grid_size;
        c.noise_scale = config->noise_scale;
        std::vector<spcdist::DistanceMethod> ms;
        for (size_t i = 0; i < method_count; ++i) ms.push_back(to_method(methods[i]));
        *out = new spcdist_report{spcdist::run_benchmark(c, ms, threads)};
    });
}

SPCDIST_API void spcdist_report_free(spcdist_report* report) { delete report; }

SPCDIST_API spcdist_status spcdist_report_write_csv(const spcdist_report* report, const char* path,
                                                    const char* raw_path, const char* comment) {
    return run([&] {
        require(report && path, "null argument");
        write_output(path, [&](std::ostream& os) {
            spcdist::write_benchmark_csv(os, report->value, comment_lines(comment));
        });
        if (raw_path) {
            write_output(raw_path, [&](std::ostream& os) {
            spcdist::write_benchmark_raw_csv(os, report->value, comment_lines(comment));
        });
        }
    });
}

SPCDIST_API spcdist_status spcdist_report_lookup(const spcdist_report* report, const char* family,
                                                 const char* noise, spcdist_method method,
                                                 double* q_mean, double* r_mean) {
    return run([&] {
        require(report && family && noise && q_mean && r_mean, "null argument");
        const auto& row = report->value.row(family, noise, to_method(method));
        *q_mean = row.q_mean;
        *r_mean = row.r_mean;
    });
}

}  // extern "C"

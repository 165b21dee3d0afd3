// Command-line front end. Talks to the library only through spcdist.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spcdist/spcdist.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

struct Failure {
    int exit_code;
    std::string message;
};

int exit_code_for(spcdist_status status) {
    switch (status) {
        case SPCDIST_OK: return kExitOk;
        case SPCDIST_ERR_NUMERIC: return kExitNumeric;
        case SPCDIST_ERR_INTERNAL: return 1;
        default: return kExitValidation;
    }
}

void check(spcdist_status status) {
    if (status != SPCDIST_OK) throw Failure{exit_code_for(status), spcdist_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using DatasetHandle = Handle<spcdist_dataset, spcdist_dataset_free>;
using MatrixHandle = Handle<spcdist_matrix, spcdist_matrix_free>;
using ClusteringHandle = Handle<spcdist_clustering, spcdist_clustering_free>;
using ReportHandle = Handle<spcdist_report, spcdist_report_free>;



std::string format17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

unsigned thread_cap() {
    const char* env = std::getenv("SPCDIST_THREADS");
    if (!env || !*env) return 0;
    char* end = nullptr;
    unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0' || v == 0) throw Failure{kExitValidation, "SPCDIST_THREADS must be a positive integer"};
    return static_cast<unsigned>(v);
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) {
        std::stringstream ss(item);
        std::string part;
        while (std::getline(ss, part, ','))
            if (!part.empty()) out.push_back(part);
    }
    return out;
}

std::string join(const std::vector<std::string>& items, const char* sep = ",") {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
    return out;
}

// key=value lines; '#' starts a comment. Keys are long option names without
// dashes. Values already given on the command line win.
void apply_config_file(CLI::App& command, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Failure{kExitValidation, "cannot open config file '" + path + "'"};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Failure{kExitValidation, path + ":" + std::to_string(line_no) + ": expected key=value"};
        auto strip = [](std::string s) {
            auto b = s.find_first_not_of(" \t");
            auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key == "config") continue;
        CLI::Option* opt = command.get_option_no_throw("--" + key);
        if (!opt)
            throw Failure{kExitValidation, path + ":" + std::to_string(line_no) + ": unknown option '" +
                                               key + "' for command " + command.get_name()};
        if (opt->count() > 0) continue;
        opt->add_result(value);
        opt->run_callback();
    }
}

class Provenance {
public:
    explicit Provenance(std::string command) {
        lines_.push_back("spcdist " + std::string(spcdist_version()) + " " + std::move(command));
    }
    void add(const std::string& key, const std::string& value) { lines_.push_back(key + "=" + value); }
    std::string text() const { return join(lines_, "\n"); }

private:
    std::vector<std::string> lines_;
};

struct FitOptions {
    std::string input;
    std::string lambda = "auto";
    std::size_t grid = 0;
    std::string out = "-";
};

std::string curves_path(const std::string& out) {
    std::string stem = out;
    if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv") stem.resize(stem.size() - 4);
    return stem + "_curves.csv";
}

void cmd_fit(const FitOptions& o) {
    DatasetHandle ds;
    check(spcdist_dataset_read_csv(o.input.c_str(), 0, 0.0, 0.0, ds.out()));

    bool fixed = o.lambda != "auto";
    double fixed_lambda = 0.0;
    if (fixed) {
        char* end = nullptr;
        fixed_lambda = std::strtod(o.lambda.c_str(), &end);
        if (o.lambda.empty() || *end != '\0' || !(fixed_lambda > 0.0))
            throw Failure{kExitValidation, "--lambda must be 'auto' or a positive number"};
    }
    if (o.grid == 1) throw Failure{kExitValidation, "--grid needs at least 2 points"};
    if (o.grid > 0 && o.out == "-")
        throw Failure{kExitValidation, "--grid requires --out so curves can go next to it"};

    Provenance prov("fit");
    prov.add("input", o.input);
    prov.add("lambda", o.lambda);
    prov.add("grid", std::to_string(o.grid));
    prov.add("out", o.out);

    const std::size_t n = spcdist_dataset_size(ds.get());
    std::vector<double> lambdas(n, fixed_lambda);
    std::ostringstream table;
    {
        std::stringstream ss(prov.text());
        std::string line;
        while (std::getline(ss, line)) table << "# " << line << '\n';
    }
    table << "subject,lambda_hat,sigma2_hat,sigma_u2_hat\n";
    for (std::size_t i = 0; i < n; ++i) {
        table << spcdist_dataset_subject_id(ds.get(), i) << ',';
        if (fixed) {
            table << format17(fixed_lambda) << ",,\n";
        } else {
            spcdist_reml_result r{};
            check(spcdist_select_lambda(ds.get(), i, &r));
            lambdas[i] = r.lambda_hat;
            table << format17(r.lambda_hat) << ',' << format17(r.sigma2_hat) << ','
                  << format17(r.sigma_u2_hat) << '\n';
        }
    }

    if (o.out == "-") {
        std::cout << table.str() << std::flush;
    } else {
        std::ofstream out(o.out, std::ios::binary);
        if (!out) throw Failure{kExitValidation, "cannot write '" + o.out + "'"};
        out << table.str();
        if (!out.flush()) throw Failure{kExitValidation, "failed writing '" + o.out + "'"};
    }

    if (o.grid > 0) {
        double lo = 0.0, hi = 0.0;
        check(spcdist_dataset_domain(ds.get(), &lo, &hi));
        std::vector<double> times(o.grid), values(o.grid);
        for (std::size_t k = 0; k < o.grid; ++k)
            times[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(o.grid - 1);
        times.back() = hi;
        const std::string path = curves_path(o.out);
        std::ofstream curves(path, std::ios::binary);
        if (!curves) throw Failure{kExitValidation, "cannot write '" + path + "'"};
        std::stringstream ss(prov.text());
        std::string line;
        while (std::getline(ss, line)) curves << "# " << line << '\n';
        curves << "subject,time,value\n";
        for (std::size_t i = 0; i < n; ++i) {
            check(spcdist_fit_evaluate(ds.get(), i, lambdas[i], times.data(), times.size(), values.data()));
            for (std::size_t k = 0; k < o.grid; ++k)
                curves << spcdist_dataset_subject_id(ds.get(), i) << ',' << format17(times[k]) << ','
                       << format17(values[k]) << '\n';
        }
        if (!curves.flush()) throw Failure{kExitValidation, "failed writing '" + path + "'"};
    }
}

struct DistOptions {
    std::string input;
    std::string method = "spc";
    std::string out = "-";
};

void cmd_dist(const DistOptions& o) {
    spcdist_method method;
    if (o.method == "spc")
        method = SPCDIST_METHOD_SPC;
    else if (o.method == "ss")
        method = SPCDIST_METHOD_SS;
    else if (o.method == "eucl")
        method = SPCDIST_METHOD_EUCL;
    else
        throw Failure{kExitValidation, "--method must be spc, ss or eucl"};

    DatasetHandle ds;
    check(spcdist_dataset_read_csv(o.input.c_str(), 0, 0.0, 0.0, ds.out()));
    MatrixHandle m;
    check(spcdist_distance_matrix(ds.get(), method, thread_cap(), m.out()));
    Provenance prov("dist");
    prov.add("input", o.input);
    prov.add("method", o.method);
    prov.add("out", o.out);
    check(spcdist_matrix_write_csv(m.get(), o.out.c_str(), prov.text().c_str()));
}

struct OutlierOptions {
    std::string input;
    std::size_t k = 3;
    std::string mode = "gap";
    std::string out = "-";
};

void cmd_outliers(const OutlierOptions& o) {
    MatrixHandle m;
    check(spcdist_matrix_read_csv(o.input.c_str(), m.out()));
    const std::size_t n = spcdist_matrix_size(m.get());
    std::vector<double> scores(n);
    std::vector<int> flags(n);
    check(spcdist_knn_scores(m.get(), o.k, scores.data()));
    check(spcdist_flag_outliers(scores.data(), n, o.mode.c_str(), flags.data()));
    Provenance prov("outliers");
    prov.add("input", o.input);
    prov.add("k", std::to_string(o.k));
    prov.add("mode", o.mode);
    prov.add("out", o.out);
    check(spcdist_write_outliers_csv(m.get(), scores.data(), flags.data(), o.out.c_str(),
                                     prov.text().c_str()));
}

struct ClusterOptions {
    std::string input;
    std::size_t k = 0;
    std::vector<std::string> exclude;
    std::string out = "-";
};

void cmd_cluster(const ClusterOptions& o) {
    MatrixHandle full;
    check(spcdist_matrix_read_csv(o.input.c_str(), full.out()));
    const std::vector<std::string> excluded = split_list(o.exclude);
    std::vector<const char*> raw;
    for (const auto& id : excluded) raw.push_back(id.c_str());
    MatrixHandle kept;
    check(spcdist_matrix_exclude(full.get(), raw.data(), raw.size(), kept.out()));
    ClusteringHandle c;
    check(spcdist_pam(kept.get(), o.k, c.out()));
    Provenance prov("cluster");
    prov.add("input", o.input);
    prov.add("k", std::to_string(o.k));
    prov.add("exclude", join(excluded));
    prov.add("out", o.out);
    prov.add("total_cost", format17(spcdist_clustering_cost(c.get())));
    check(spcdist_clustering_write_csv(c.get(), o.out.c_str(), prov.text().c_str()));
}

struct SimulateOptions {
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    std::vector<std::string> methods{"eucl", "ss", "spc"};
    std::size_t series_per_cell = 10;
    std::size_t grid_size = 200;
    double noise_scale = 1.0;
    std::string raw;
    std::string out = "-";
};

void cmd_simulate(const SimulateOptions& o) {
    const std::vector<std::string> names = split_list(o.methods);
    std::vector<spcdist_method> methods;
    for (const auto& name : names) {
        if (name == "spc")
            methods.push_back(SPCDIST_METHOD_SPC);
        else if (name == "ss")
            methods.push_back(SPCDIST_METHOD_SS);
        else if (name == "eucl")
            methods.push_back(SPCDIST_METHOD_EUCL);
        else
            throw Failure{kExitValidation, "unknown method '" + name + "' (spc, ss, eucl)"};
    }
    spcdist_sim_config config;
    spcdist_sim_config_default(&config);
    config.seed = o.seed;
    config.replicates = o.replicates;
    config.series_per_cell = o.series_per_cell;
    config.grid_size = o.grid_size;
    config.noise_scale = o.noise_scale;

    ReportHandle report;
    check(spcdist_simulate(&config, methods.data(), methods.size(), thread_cap(), report.out()));
    Provenance prov("simulate");
    prov.add("replicates", std::to_string(o.replicates));
    prov.add("seed", std::to_string(o.seed));
    prov.add("methods", join(names));
    prov.add("series-per-cell", std::to_string(o.series_per_cell));
    prov.add("grid-size", std::to_string(o.grid_size));
    prov.add("noise-scale", format17(o.noise_scale));
    prov.add("raw", o.raw);
    prov.add("out", o.out);
    check(spcdist_report_write_csv(report.get(), o.out.c_str(),
                                   o.raw.empty() ? nullptr : o.raw.c_str(), prov.text().c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dissimilarities between irregularly sampled curves via smoothing-parameter "
                 "commutation, with outlier scoring, PAM clustering and a simulation benchmark"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(spcdist_version()));

    std::map<CLI::App*, std::string> config_paths;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_paths[sub], "key=value file; command-line flags take precedence");
    };

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "REML smoothing parameter (or a fixed one) per subject");
    fit_cmd->add_option("input", fit.input, "long CSV: subject,time,value")->required();
    fit_cmd->add_option("--lambda", fit.lambda, "'auto' for REML or a positive value")->capture_default_str();
    fit_cmd->add_option("--grid", fit.grid, "also write m equispaced evaluations per subject to <out>_curves.csv");
    fit_cmd->add_option("--out", fit.out, "output CSV ('-' for stdout)")->capture_default_str();
    add_config(fit_cmd);

    DistOptions dist;
    auto* dist_cmd = app.add_subcommand("dist", "dissimilarity matrix");
    dist_cmd->add_option("input", dist.input, "long CSV: subject,time,value")->required();
    dist_cmd->add_option("--method", dist.method, "spc, ss or eucl")->capture_default_str();
    dist_cmd->add_option("--out", dist.out, "output CSV ('-' for stdout)")->capture_default_str();
    add_config(dist_cmd);

    OutlierOptions outl;
    auto* out_cmd = app.add_subcommand("outliers", "k-nearest-neighbour outlier scores");
    out_cmd->add_option("input", outl.input, "matrix CSV from 'dist'")->required();
    out_cmd->add_option("--k", outl.k, "neighbours averaged per subject")->capture_default_str();
    out_cmd->add_option("--mode", outl.mode, "'gap' or 'threshold:<t>'")->capture_default_str();
    out_cmd->add_option("--out", outl.out, "output CSV ('-' for stdout)")->capture_default_str();
    add_config(out_cmd);

    ClusterOptions clus;
    auto* clus_cmd = app.add_subcommand("cluster", "partitioning around medoids");
    clus_cmd->add_option("input", clus.input, "matrix CSV from 'dist'")->required();
    clus_cmd->add_option("--k", clus.k, "number of clusters");
    clus_cmd->add_option("--exclude", clus.exclude, "subject ids to drop first (comma separated)");
    clus_cmd->add_option("--out", clus.out, "output CSV ('-' for stdout)")->capture_default_str();
    add_config(clus_cmd);

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Q/R benchmark over simulated curve families");
    sim_cmd->add_option("--replicates", sim.replicates)->capture_default_str();
    sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
    sim_cmd->add_option("--methods", sim.methods, "comma separated subset of eucl,ss,spc")->capture_default_str();
    sim_cmd->add_option("--series-per-cell", sim.series_per_cell)->capture_default_str();
    sim_cmd->add_option("--grid-size", sim.grid_size)->capture_default_str();
    sim_cmd->add_option("--noise-scale", sim.noise_scale, "0 gives noise-free series")->capture_default_str();
    sim_cmd->add_option("--raw", sim.raw, "optional per-replicate CSV");
    sim_cmd->add_option("--out", sim.out, "output CSV ('-' for stdout)")->capture_default_str();
    add_config(sim_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        for (auto* sub : app.get_subcommands()) {
            const std::string& path = config_paths[sub];
            if (!path.empty()) apply_config_file(*sub, path);
        }
        if (fit_cmd->parsed()) cmd_fit(fit);
        if (dist_cmd->parsed()) cmd_dist(dist);
        if (out_cmd->parsed()) cmd_outliers(outl);
        if (clus_cmd->parsed()) {
            if (clus.k == 0) throw Failure{kExitValidation, "--k is required and must be positive"};
            cmd_cluster(clus);
        }
        if (sim_cmd->parsed()) cmd_simulate(sim);
    } catch (const Failure& f) {
        std::cerr << "spcdist: " << f.message << '\n';
        return f.exit_code;
    } catch (const CLI::ParseError& e) {
        std::cerr << "spcdist: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitOk;
}

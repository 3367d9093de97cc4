#include "cli.hpp"

#include "dtlfssc/data.hpp"
#include "dtlfssc/metrics.hpp"
#include "dtlfssc/pipeline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace dtlfssc::cli {

namespace fs = std::filesystem;

Preset preset_by_name(const std::string& name)
{
    if (name == "motion") return {0.03, 0.5, 4.0, 0.05, 1.0};
    if (name == "digits") return {0.07, 0.01, 8.0, 0.07, 0.07};
    throw ConfigError("unknown preset '" + name + "' (expected motion or digits)");
}

namespace {

std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

std::string fixed2(double v)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << v;
    return os.str();
}

void print_warnings(const Diagnostics& diag, std::ostream& err)
{
    for (const auto& w : diag.warnings) err << "warning: " << w << '\n';
}

void ensure_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ParseError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// Values given both in a config file and on the command line resolve to the
// command line, because config entries are placed first and the last one wins.
std::vector<std::string> expand_config(const CLI::App& sub, const std::vector<std::string>& args)
{
    std::optional<std::string> path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
    }
    if (!path) return args;

    std::ifstream in(*path);
    if (!in) throw ConfigError("cannot open config file " + *path);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::ParseError& e) {
        throw ConfigError(*path + ": " + e.what());
    }

    std::vector<std::string> expanded;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue; // section markers
        if (!item.parents.empty()) throw ConfigError(*path + ": sections are not supported ('" + item.fullname() + "')");
        std::string key = item.name;
        std::replace(key.begin(), key.end(), '_', '-');
        const CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr || key == "config" || key == "help") {
            throw ConfigError(*path + ": unknown key '" + item.name + "'");
        }
        if (item.inputs.size() != 1) throw ConfigError(*path + ": key '" + item.name + "' needs exactly one value");
        expanded.push_back("--" + key);
        expanded.push_back(item.inputs.front());
    }
    expanded.insert(expanded.end(), args.begin(), args.end());
    return expanded;
}

struct SynthArgs {
    SyntheticSpec spec;
    std::string out;
};

struct ClusterArgs {
    std::string preset = "motion";
    std::string method = "dtl-fssc";
    std::string data;
    std::string truth;
    std::string out;
    Index k = 0;
    Index p = 0;
    int t_max = 0;
    std::uint64_t seed = 0;
    std::optional<double> alpha, beta, tau, lambda, tau1, mu, ssc_alpha;
    int t_fssc = 3;
    int t_dtl = 1;
    int dc_steps = 10;
    int lasso_iters = 500;
    double lasso_tol = 1e-6;
    int admm_iters = 100;
    double admm_tol = 1e-6;
    double admm_rho = 1.0;
    int feature_admm_iters = 300;
    bool normalize = true;
    int threads = 0;
};

struct AnglesArgs {
    std::string data;
    std::string labels;
    std::string op = "identity";
    std::string out;
};

void add_synth_options(CLI::App& sub, SynthArgs& a)
{
    sub.add_option("--config", "Flat key=value file; flags override it");
    sub.add_option("--k", a.spec.clusters, "Number of subspaces")->capture_default_str();
    sub.add_option("--d", a.spec.subspace_dim, "Subspace dimension")->capture_default_str();
    sub.add_option("--n", a.spec.ambient_dim, "Ambient dimension")->capture_default_str();
    sub.add_option("--m", a.spec.points_per_cluster, "Points per subspace")->capture_default_str();
    sub.add_option("--sigma", a.spec.noise_sigma, "Gaussian noise level")->capture_default_str();
    sub.add_option("--seed", a.spec.seed, "Random seed")->capture_default_str();
    sub.add_option("--out", a.out, "Output directory (data.csv, truth.csv)")->required();
}

void add_cluster_options(CLI::App& sub, ClusterArgs& a)
{
    sub.add_option("--config", "Flat key=value file; flags override it");
    sub.add_option("--preset", a.preset, "Parameter preset: motion or digits")->capture_default_str();
    sub.add_option("--method", a.method, "dtl-fssc, dtl-fssc-binary or ssc")->capture_default_str();
    sub.add_option("--data", a.data, "Data matrix CSV, one sample per column")->required();
    sub.add_option("--truth", a.truth, "Ground-truth labels, one id per line");
    sub.add_option("--out", a.out, "Output directory")->required();
    sub.add_option("--k", a.k, "Number of clusters")->required();
    sub.add_option("--p", a.p, "Feature dimension (0 = same as input)")->capture_default_str();
    sub.add_option("--t-max", a.t_max, "Outer iterations (0 = 10 when p = n, else 30)")->capture_default_str();
    sub.add_option("--seed", a.seed, "Random seed")->capture_default_str();
    sub.add_option("--alpha", a.alpha, "Sparsity weight");
    sub.add_option("--beta", a.beta, "Label smoothness weight");
    sub.add_option("--tau", a.tau, "Label barrier weight");
    sub.add_option("--lambda", a.lambda, "Feature fidelity weight");
    sub.add_option("--tau1", a.tau1, "Operator barrier weight");
    sub.add_option("--mu", a.mu, "Subgradient step (default 0.1/lambda)");
    sub.add_option("--ssc-alpha", a.ssc_alpha, "Sparsity weight of the SSC initializer (default alpha)");
    sub.add_option("--t-fssc", a.t_fssc, "Alternations per FSSC stage")->capture_default_str();
    sub.add_option("--t-dtl", a.t_dtl, "Rounds per DTL stage")->capture_default_str();
    sub.add_option("--dc-steps", a.dc_steps, "Cap on DC refinement steps")->capture_default_str();
    sub.add_option("--lasso-iters", a.lasso_iters, "Weighted lasso iteration cap")->capture_default_str();
    sub.add_option("--lasso-tol", a.lasso_tol, "Weighted lasso tolerance")->capture_default_str();
    sub.add_option("--admm-iters", a.admm_iters, "ADMM iteration cap (labels and operator)")->capture_default_str();
    sub.add_option("--admm-tol", a.admm_tol, "ADMM tolerance")->capture_default_str();
    sub.add_option("--admm-rho", a.admm_rho, "ADMM penalty")->capture_default_str();
    sub.add_option("--feature-admm-iters", a.feature_admm_iters, "Feature ADMM iteration cap")->capture_default_str();
    sub.add_option("--normalize", a.normalize, "Unit-normalize transformed samples")->capture_default_str();
    sub.add_option("--threads", a.threads, "OpenMP threads (0 = runtime default)")->capture_default_str();
}

void add_angles_options(CLI::App& sub, AnglesArgs& a)
{
    sub.add_option("--config", "Flat key=value file; flags override it");
    sub.add_option("--data", a.data, "Data matrix CSV")->required();
    sub.add_option("--labels", a.labels, "Group labels, one id per line")->required();
    sub.add_option("--operator", a.op, "Operator CSV, or 'identity'")->capture_default_str();
    sub.add_option("--out", a.out, "Output CSV for the K×K angle matrix (degrees)")->required();
}

PipelineConfig make_config(const ClusterArgs& a)
{
    const Preset preset = preset_by_name(a.preset);
    PipelineConfig c;
    c.k = a.k;
    c.p = a.p;
    c.seed = a.seed;
    c.fssc.alpha = a.alpha.value_or(preset.alpha);
    c.fssc.beta = a.beta.value_or(preset.beta);
    c.fssc.tau = a.tau.value_or(preset.tau);
    c.fssc.t_fssc = a.t_fssc;
    c.fssc.lasso = SolverOptions{a.lasso_iters, a.lasso_tol, 1.0, a.seed};
    c.fssc.admm = SolverOptions{a.admm_iters, a.admm_tol, a.admm_rho, a.seed};
    c.dtl.lambda = a.lambda.value_or(preset.lambda);
    c.dtl.tau1 = a.tau1.value_or(preset.tau1);
    c.dtl.mu = a.mu.value_or(0.0);
    if (a.mu && !(*a.mu > 0.0)) throw ConfigError("mu must be > 0");
    c.dtl.t_dtl = a.t_dtl;
    c.dtl.dc_steps = a.dc_steps;
    c.dtl.admm = SolverOptions{a.admm_iters, a.admm_tol, a.admm_rho, a.seed};
    c.dtl.feature_admm = SolverOptions{a.feature_admm_iters, a.admm_tol, a.admm_rho, a.seed};
    c.normalize_features = a.normalize;
    c.ssc_alpha = a.ssc_alpha;
    if (a.method == "dtl-fssc") {
        c.membership = MembershipMode::fuzzy;
    } else if (a.method == "dtl-fssc-binary") {
        c.membership = MembershipMode::binary;
    } else if (a.method != "ssc") {
        throw ConfigError("unknown method '" + a.method + "' (expected dtl-fssc, dtl-fssc-binary or ssc)");
    }
    if (a.threads < 0) throw ConfigError("threads must be >= 0");
    return c;
}

void write_history(const fs::path& path, const RunHistory& history)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path.string());
    out << "iter,fssc_obj,dtl_obj,disc_gap,error_pct\n";
    for (const auto& r : history.records) {
        out << r.iteration << ',' << format_number(r.fssc_objective) << ',' << format_number(r.dtl_objective) << ','
            << format_number(r.discriminative_gap) << ',' << format_number(r.error_pct) << '\n';
    }
    if (!out) throw ParseError("failed while writing " + path.string());
}

int cmd_synth(const SynthArgs& a, std::ostream& out)
{
    const SyntheticData data = generate_synthetic(a.spec);
    const fs::path dir(a.out);
    ensure_dir(dir);
    write_matrix_csv(dir / "data.csv", data.x);
    write_labels(dir / "truth.csv", data.labels);
    const auto& s = a.spec;
    out << "n=" << s.ambient_dim << " N=" << data.x.cols() << " K=" << s.clusters << " d=" << s.subspace_dim
        << " sigma=" << format_number(s.noise_sigma) << " seed=" << s.seed << '\n';
    return exit_ok;
}

int cmd_cluster(const ClusterArgs& a, std::ostream& out, std::ostream& err)
{
    // Everything up to the first solver call is configuration: exit 2 on failure.
    PipelineConfig config;
    Matrix x;
    std::optional<Labels> truth;
    try {
        config = make_config(a);
        config.validate();
        x = read_matrix_csv(a.data);
        if (!a.truth.empty()) truth = read_labels(a.truth);
        if (a.t_max < 0) throw ConfigError("t_max must be >= 0");
        config.t_max = a.t_max > 0 ? a.t_max : (config.feature_dim(x.rows()) == x.rows() ? 10 : 30);
        config.validate_for(x);
        if (truth && static_cast<Index>(truth->size()) != x.cols()) {
            throw ConfigError("truth file " + a.truth + " has " + std::to_string(truth->size()) + " labels for " +
                              std::to_string(x.cols()) + " samples");
        }
        ensure_dir(a.out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
#if defined(_OPENMP)
    if (a.threads > 0) omp_set_num_threads(a.threads);
#endif

    const fs::path dir(a.out);
    try {
        Labels labels;
        TransformOperator op;
        Diagnostics diag;
        if (a.method == "ssc") {
            op = init_operator(config.feature_dim(x.rows()), x.rows(), config.seed);
            const Matrix xf = config.normalize_features ? normalize_columns(op.apply(x), &diag) : op.apply(x);
            const SscResult ssc = ssc_baseline(xf, config.k, config.ssc_alpha.value_or(config.fssc.alpha),
                                               config.fssc.lasso, config.seed, &diag);
            labels = ssc.labels;
        } else {
            PipelineResult res = run_dtl_fssc(x, config, truth);
            labels = res.labels;
            op = res.a;
            diag = res.diagnostics;
            write_matrix_csv(dir / "membership.csv", res.q.matrix());
            if (truth) write_history(dir / "history.csv", res.history);
        }
        print_warnings(diag, err);
        write_labels(dir / "labels.csv", labels);
        write_matrix_csv(dir / "operator.csv", op.matrix());
        if (truth) {
            int truth_k = 0;
            for (int l : *truth) truth_k = std::max(truth_k, l + 1);
            write_matrix_csv(dir / "angles.csv", angle_matrix(op, x, *truth, truth_k));
            out << "error%: " << fixed2(clustering_error(labels, *truth)) << '\n';
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "solver aborted: " << e.what() << '\n';
        return exit_solver;
    }
    return exit_ok;
}

int cmd_angles(const AnglesArgs& a, std::ostream& err)
{
    const Matrix x = read_matrix_csv(a.data);
    const Labels labels = read_labels(a.labels);
    if (static_cast<Index>(labels.size()) != x.cols()) {
        throw ConfigError("labels file " + a.labels + " has " + std::to_string(labels.size()) + " entries for " +
                          std::to_string(x.cols()) + " samples");
    }
    const TransformOperator op =
        a.op == "identity" ? TransformOperator::identity(x.rows()) : TransformOperator(read_matrix_csv(a.op));
    if (op.input_dim() != x.rows()) {
        throw ConfigError("operator has " + std::to_string(op.input_dim()) + " columns for " +
                          std::to_string(x.rows()) + "-dimensional data");
    }
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    Diagnostics diag;
    const Matrix angles = angle_matrix(op, x, labels, k, &diag);
    print_warnings(diag, err);
    write_matrix_csv(a.out, angles);
    return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Subspace clustering with discriminative transformation learning"};
    app.name("dtlfssc");
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SynthArgs synth;
    ClusterArgs cluster;
    AnglesArgs angles;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic union-of-subspaces data set");
    CLI::App* cluster_cmd = app.add_subcommand("cluster", "Cluster the columns of a data matrix");
    CLI::App* angles_cmd = app.add_subcommand("angles", "Smallest principal angles between labelled groups");
    add_synth_options(*synth_cmd, synth);
    add_cluster_options(*cluster_cmd, cluster);
    add_angles_options(*angles_cmd, angles);

    try {
        std::vector<std::string> argv = args;
        if (!argv.empty()) {
            const CLI::App* sub = app.get_subcommand_no_throw(argv.front());
            if (sub != nullptr) {
                std::vector<std::string> rest(argv.begin() + 1, argv.end());
                rest = expand_config(*sub, rest);
                rest.insert(rest.begin(), argv.front());
                argv = std::move(rest);
            }
        }
        std::reverse(argv.begin(), argv.end()); // CLI11 consumes vectors from the back
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        if (*synth_cmd) return cmd_synth(synth, out);
        if (*cluster_cmd) return cmd_cluster(cluster, out, err);
        if (*angles_cmd) return cmd_angles(angles, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

} // namespace dtlfssc::cli

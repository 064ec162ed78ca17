#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "afcraman/afcraman.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;
using namespace afcraman;

namespace {

njson load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open config file '" + path + "'");
    return njson::parse(in);
}

std::string joined(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

void check_keys(const njson& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw validation_error(joined(path, it.key()) + " is not a recognized key");
    }
}

const njson& require_object(const njson& root, const char* key) {
    if (!root.contains(key))
        throw validation_error(std::string(key) + " section is required");
    const njson& obj = root.at(key);
    if (!obj.is_object())
        throw validation_error(std::string(key) + " must be an object");
    return obj;
}

double get_num(const njson& obj, const char* key, const std::string& path) {
    if (!obj.contains(key))
        throw validation_error(joined(path, key) + " is required");
    const njson& v = obj.at(key);
    if (!v.is_number())
        throw validation_error(joined(path, key) + " must be a number");
    return v.get<double>();
}

double get_num_or(const njson& obj, const char* key, const std::string& path,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    const njson& v = obj.at(key);
    if (!v.is_number())
        throw validation_error(joined(path, key) + " must be a number");
    return v.get<double>();
}

long long get_int_or(const njson& obj, const char* key, const std::string& path,
                     long long fallback) {
    if (!obj.contains(key)) return fallback;
    const njson& v = obj.at(key);
    if (!v.is_number_integer())
        throw validation_error(joined(path, key) + " must be an integer");
    return v.get<long long>();
}

std::string get_string(const njson& obj, const char* key, const std::string& path) {
    const njson& v = obj.at(key);
    if (!v.is_string())
        throw validation_error(joined(path, key) + " must be a string");
    return v.get<std::string>();
}

std::vector<double> get_num_list(const njson& obj, const char* key,
                                 const std::string& path) {
    if (!obj.contains(key))
        throw validation_error(joined(path, key) + " is required");
    const njson& v = obj.at(key);
    if (!v.is_array() || v.empty())
        throw validation_error(joined(path, key) + " must be a non-empty array");
    std::vector<double> out;
    for (const njson& e : v) {
        if (!e.is_number())
            throw validation_error(joined(path, key) + " must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

CombParams parse_comb(const njson& root) {
    const njson& c = require_object(root, "comb");
    if (c.contains("preset")) {
        check_keys(c, {"preset", "delta0_hz"}, "comb");
        const auto m = find_preset(builtin_presets(), get_string(c, "preset", "comb"));
        return comb_from_preset(m, get_num(c, "delta0_hz", "comb"));
    }
    check_keys(c, {"gamma_fwhm_hz", "delta0_hz", "big_gamma_hz", "alpha_l"}, "comb");
    CombParams p;
    p.gamma_fwhm_hz = get_num(c, "gamma_fwhm_hz", "comb");
    p.delta0_hz = get_num(c, "delta0_hz", "comb");
    p.big_gamma_hz = get_num(c, "big_gamma_hz", "comb");
    p.alpha_l = get_num(c, "alpha_l", "comb");
    validate(p);
    return p;
}

ProtocolParams parse_protocol(const njson& root, const CombParams& comb) {
    const njson& p = require_object(root, "protocol");
    check_keys(p, {"theta0_sq", "t_d_s", "tau_s", "read_area", "branching_ratio"},
               "protocol");
    const double revival = 1.0 / comb.delta0_hz;
    ProtocolParams out;
    out.theta0_sq = get_num(p, "theta0_sq", "protocol");
    out.t_d_s = get_num_or(p, "t_d_s", "protocol", 0.3 * revival);
    out.tau_s = get_num_or(p, "tau_s", "protocol", revival);
    out.read_area = get_num_or(p, "read_area", "protocol", pi);
    out.branching_ratio = get_num_or(p, "branching_ratio", "protocol", 1.0);
    validate(out);
    return out;
}

GridSpec parse_grid(const njson& root) {
    GridSpec spec;
    if (!root.contains("grid")) return spec;
    const njson& g = require_object(root, "grid");
    check_keys(g,
               {"n_z", "classes_per_fwhm", "envelope_sigmas", "tooth_tail_sigmas",
                "time_step_fraction", "force", "sampling", "n_atoms", "seed"},
               "grid");
    spec.n_z = static_cast<int>(get_int_or(g, "n_z", "grid", spec.n_z));
    spec.classes_per_fwhm =
        get_num_or(g, "classes_per_fwhm", "grid", spec.classes_per_fwhm);
    spec.envelope_sigmas = get_num_or(g, "envelope_sigmas", "grid", spec.envelope_sigmas);
    spec.tooth_tail_sigmas =
        get_num_or(g, "tooth_tail_sigmas", "grid", spec.tooth_tail_sigmas);
    spec.time_step_fraction =
        get_num_or(g, "time_step_fraction", "grid", spec.time_step_fraction);
    if (g.contains("force")) {
        if (!g.at("force").is_boolean())
            throw validation_error("grid.force must be a boolean");
        spec.force = g.at("force").get<bool>();
    }
    if (g.contains("sampling")) {
        const std::string s = get_string(g, "sampling", "grid");
        if (s == "quadrature")
            spec.sampling = GridSpec::Sampling::quadrature;
        else if (s == "monte_carlo")
            spec.sampling = GridSpec::Sampling::monte_carlo;
        else
            throw validation_error("grid.sampling must be quadrature or monte_carlo");
    }
    spec.n_atoms = static_cast<int>(get_int_or(g, "n_atoms", "grid", spec.n_atoms));
    spec.seed = static_cast<std::uint64_t>(
        get_int_or(g, "seed", "grid", static_cast<long long>(spec.seed)));
    return spec;
}

struct OutputSpec {
    std::string path;
    std::string format;
};

OutputSpec parse_output(const njson& root, const char* default_format) {
    OutputSpec out{"", default_format};
    if (!root.contains("output")) return out;
    const njson& o = require_object(root, "output");
    check_keys(o, {"path", "format"}, "output");
    if (o.contains("path")) out.path = get_string(o, "path", "output");
    if (o.contains("format")) out.format = get_string(o, "format", "output");
    if (out.format != "json" && out.format != "csv")
        throw validation_error("output.format must be json or csv");
    return out;
}

void emit(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    std::ofstream f(target);
    if (!f) throw std::runtime_error("cannot write output file '" + path + "'");
    f << text;
}

void print_warnings(const WarningList& warnings) {
    for (const auto& w : warnings)
        std::cerr << "warning: " << w.code << ": " << w.message << "\n";
}

double rel_delta(double value, double reference) {
    if (reference == 0.0) return value == 0.0 ? 0.0 : INFINITY;
    return std::abs(value - reference) / std::abs(reference);
}

int run_simulate(const std::string& config_path, double theta0_override,
                 double alpha_override, double finesse_override) {
    const njson root = load_config(config_path);
    check_keys(root, {"comb", "protocol", "grid", "output"}, "");
    CombParams comb = parse_comb(root);
    if (alpha_override > 0.0) comb.alpha_l = alpha_override;
    if (finesse_override > 0.0) comb.gamma_fwhm_hz = comb.delta0_hz / finesse_override;
    validate(comb);
    ProtocolParams prot = parse_protocol(root, comb);
    if (theta0_override > 0.0) {
        prot.theta0_sq = theta0_override;
        validate(prot);
    }
    const GridSpec spec = parse_grid(root);
    const OutputSpec out = parse_output(root, "json");

    const EfficiencyReport analytic = full_report(comb, prot);
    print_warnings(analytic.warnings);

    const EnsembleGrid grid = build_grid(comb, spec);
    const EnsembleState state = write_step(grid, prot);
    const double p_dyn = stokes_mode_count(state, grid);
    const FieldTrace trace = heralded_readout(state, grid, prot);
    const double eta_dyn = trace.peak_mode_efficiency();
    const double noise_dyn = noise_flux(grid, prot);

    auto report = JsonValue::object();
    report["analytic"] = to_json(analytic);
    auto dynamics = JsonValue::object();
    dynamics["eta_readout"] = eta_dyn;
    dynamics["p_stokes"] = p_dyn;
    dynamics["noise_per_mode"] = noise_dyn;
    dynamics["echo_peak_time_s"] = trace.peak_time_s;
    dynamics["mode_window_s"] = trace.mode_window_s;
    report["dynamics"] = std::move(dynamics);
    auto deltas = JsonValue::object();
    deltas["eta_readout_rel"] = rel_delta(eta_dyn, analytic.eta_readout);
    deltas["p_stokes_rel"] = rel_delta(p_dyn, analytic.p_stokes);
    deltas["noise_rel"] = rel_delta(noise_dyn, analytic.noise_per_mode);
    report["deltas"] = std::move(deltas);

    if (out.path.empty()) {
        std::cout << report.dump();
    } else {
        fs::create_directories(out.path);
        emit(report.dump(), (fs::path(out.path) / "report.json").string());
        std::ostringstream csv;
        trace_to_csv(trace, csv);
        emit(csv.str(), (fs::path(out.path) / "trace_backward.csv").string());
    }
    return 0;
}

int run_sweep(const std::string& config_path) {
    const njson root = load_config(config_path);
    check_keys(root, {"comb", "protocol", "sweep", "output"}, "");
    const CombParams base = parse_comb(root);
    ProtocolParams prot;
    if (root.contains("protocol")) {
        prot = parse_protocol(root, base);
    } else {
        const double revival = 1.0 / base.delta0_hz;
        prot = ProtocolParams{0.01, 0.3 * revival, revival, pi, 1.0};
    }
    const njson& s = require_object(root, "sweep");
    check_keys(s, {"alpha_l", "finesse", "theta0_sq"}, "sweep");
    const auto alphas = get_num_list(s, "alpha_l", "sweep");
    const auto finesses = get_num_list(s, "finesse", "sweep");
    const auto thetas = get_num_list(s, "theta0_sq", "sweep");
    const OutputSpec out = parse_output(root, "csv");

    struct Row {
        double alpha_l, finesse, theta0_sq;
        EfficiencyReport report;
    };
    std::vector<Row> rows;
    rows.reserve(alphas.size() * finesses.size() * thetas.size());
    for (double al : alphas)
        for (double f : finesses)
            for (double th : thetas) rows.push_back({al, f, th, {}});

    auto row_params = [&](const Row& r) {
        CombParams c = base;
        c.alpha_l = r.alpha_l;
        c.gamma_fwhm_hz = base.delta0_hz / r.finesse;
        ProtocolParams p = prot;
        p.theta0_sq = r.theta0_sq;
        return std::pair(c, p);
    };
    // Validate every point up front so failures surface before the
    // parallel phase.
    for (const Row& r : rows) {
        const auto [c, p] = row_params(r);
        validate(c);
        validate(p);
        require_detection_before_revival(c, p);
    }
    parallel_chunks(rows.size(), 8, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto [c, p] = row_params(rows[i]);
            rows[i].report = full_report(c, p);
        }
    });

    if (out.format == "csv") {
        std::ostringstream os;
        os << "alpha_l,finesse,theta0_sq,p_stokes,eta_readout,noise_per_mode,"
              "snr_lower_bound,echo_time_s,mode_capacity,photons_per_write_attempt\n";
        for (const Row& r : rows) {
            os << csv_real(r.alpha_l) << ',' << csv_real(r.finesse) << ','
               << csv_real(r.theta0_sq) << ',' << csv_real(r.report.p_stokes) << ','
               << csv_real(r.report.eta_readout) << ','
               << csv_real(r.report.noise_per_mode) << ','
               << csv_real(r.report.snr_lower_bound) << ','
               << csv_real(r.report.echo_time_s) << ',' << r.report.mode_capacity << ','
               << csv_real(r.report.photons_per_write_attempt) << '\n';
        }
        emit(os.str(), out.path);
    } else {
        auto doc = JsonValue::object();
        auto arr = JsonValue::array();
        for (const Row& r : rows) {
            auto obj = JsonValue::object();
            obj["alpha_l"] = r.alpha_l;
            obj["finesse"] = r.finesse;
            obj["theta0_sq"] = r.theta0_sq;
            obj["p_stokes"] = r.report.p_stokes;
            obj["eta_readout"] = r.report.eta_readout;
            obj["noise_per_mode"] = r.report.noise_per_mode;
            obj["snr_lower_bound"] = r.report.snr_lower_bound;
            obj["echo_time_s"] = r.report.echo_time_s;
            obj["mode_capacity"] = r.report.mode_capacity;
            obj["photons_per_write_attempt"] = r.report.photons_per_write_attempt;
            arr.push_back(std::move(obj));
        }
        doc["rows"] = std::move(arr);
        emit(doc.dump(), out.path);
    }
    return 0;
}

int run_optimize(const std::string& config_path) {
    const njson root = load_config(config_path);
    check_keys(root, {"optimize", "output"}, "");
    const njson& o = require_object(root, "optimize");
    check_keys(o, {"alpha_l", "alpha_l_grid", "objective", "f_min", "f_max"}, "optimize");
    const Objective objective = objective_from_string(
        o.contains("objective") ? get_string(o, "objective", "optimize")
                                : "raman_backward");
    FinesseBounds bounds;
    bounds.f_min = get_num_or(o, "f_min", "optimize", bounds.f_min);
    bounds.f_max = get_num_or(o, "f_max", "optimize", bounds.f_max);
    const OutputSpec out = parse_output(root, "json");

    if (o.contains("alpha_l") && o.contains("alpha_l_grid"))
        throw validation_error("optimize accepts alpha_l or alpha_l_grid, not both");

    if (o.contains("alpha_l_grid")) {
        const auto grid = get_num_list(o, "alpha_l_grid", "optimize");
        const auto curve = efficiency_curve(objective, grid, bounds);
        if (out.format == "csv") {
            std::ostringstream os;
            os << "alpha_l,f_star,eta_star\n";
            for (const CurvePoint& p : curve)
                os << csv_real(p.alpha_l) << ',' << csv_real(p.f_star) << ','
                   << csv_real(p.eta_star) << '\n';
            emit(os.str(), out.path);
        } else {
            auto doc = JsonValue::object();
            doc["objective"] = to_string(objective);
            auto scan = JsonValue::object();
            scan["f_min"] = bounds.f_min;
            scan["f_max"] = bounds.f_max;
            doc["scan"] = std::move(scan);
            auto points = JsonValue::array();
            for (const CurvePoint& p : curve) {
                auto obj = JsonValue::object();
                obj["alpha_l"] = p.alpha_l;
                obj["f_star"] = p.f_star;
                obj["eta_star"] = p.eta_star;
                points.push_back(std::move(obj));
            }
            doc["points"] = std::move(points);
            emit(doc.dump(), out.path);
        }
        return 0;
    }

    const double alpha_l = get_num(o, "alpha_l", "optimize");
    const OptimizationResult result = optimize_finesse(alpha_l, objective, bounds);
    if (out.format != "json")
        throw validation_error("optimize with a single alpha_l emits json only");
    emit(to_json(result).dump(), out.path);
    return 0;
}

int run_link(const std::string& config_path) {
    const njson root = load_config(config_path);
    check_keys(root, {"link", "comb", "protocol", "output"}, "");
    const njson& l = require_object(root, "link");
    check_keys(l,
               {"distance_km", "attenuation_db_per_km", "eta_c", "eta_d", "rate_hz", "p",
                "convention", "heralds_needed"},
               "link");
    LinkParams lp;
    lp.distance_km = get_num(l, "distance_km", "link");
    lp.attenuation_db_per_km = get_num_or(l, "attenuation_db_per_km", "link", 0.0);
    lp.eta_c = get_num(l, "eta_c", "link");
    lp.eta_d = get_num(l, "eta_d", "link");
    lp.rate_hz = get_num(l, "rate_hz", "link");
    lp.p = get_num_or(l, "p", "link", 0.0);
    DistanceConvention convention = DistanceConvention::half;
    if (l.contains("convention")) {
        const std::string c = get_string(l, "convention", "link");
        if (c == "half")
            convention = DistanceConvention::half;
        else if (c == "full")
            convention = DistanceConvention::full;
        else
            throw validation_error("link.convention must be half or full");
    }
    const long heralds =
        static_cast<long>(get_int_or(l, "heralds_needed", "link", 10000));
    const OutputSpec out = parse_output(root, "json");

    if (root.contains("comb")) {
        const njson& c = require_object(root, "comb");
        if (!c.contains("preset"))
            throw validation_error(
                "link feasibility requires comb.preset; with an explicit comb, "
                "set link.p from a simulate report instead");
        check_keys(c, {"preset", "delta0_hz"}, "comb");
        const auto preset = find_preset(builtin_presets(), get_string(c, "preset", "comb"));
        const double delta0_hz = get_num(c, "delta0_hz", "comb");
        const CombParams comb = comb_from_preset(preset, delta0_hz);
        const ProtocolParams prot = parse_protocol(root, comb);
        const FeasibilityReport fr =
            feasibility_report(preset, delta0_hz, lp, prot, heralds, convention);
        print_warnings(fr.warnings);
        emit(to_json(fr).dump(), out.path);
        return 0;
    }

    if (lp.p == 0.0)
        throw validation_error("link.p is required without a comb section");
    validate(lp);
    print_warnings(link_warnings(lp));
    emit(to_json(link_report(lp, convention)).dump(), out.path);
    return 0;
}

int run_presets_list(bool as_json) {
    const auto presets = builtin_presets();
    if (as_json) {
        auto arr = JsonValue::array();
        for (const auto& m : presets) arr.push_back(to_json(m));
        std::cout << arr.dump();
        return 0;
    }
    for (const auto& m : presets) {
        std::cout << m.name << "  tooth_fwhm=" << m.gamma_fwhm_hz / 1e3
                  << " kHz  span=" << m.big_gamma_span_hz / 1e6
                  << " MHz  alpha_l=" << m.alpha_l << "  wavelength=" << m.wavelength_nm
                  << " nm  fiber_loss=" << m.attenuation_db_per_km << " dB/km\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Photon-pair source toolkit for frequency-comb-structured ensembles"};
    app.require_subcommand(1);

    std::string config;
    double theta0_override = 0.0;
    double alpha_override = 0.0;
    double finesse_override = 0.0;

    auto* simulate = app.add_subcommand(
        "simulate", "Run the write/readout dynamics and compare with the closed forms");
    simulate->add_option("--config", config, "JSON config file")->required();
    simulate->add_option("--theta0-sq", theta0_override,
                         "Override the write-pulse area squared");
    simulate->add_option("--alpha-l", alpha_override, "Override the peak optical depth");
    simulate->add_option("--finesse", finesse_override,
                         "Override the comb finesse (sets the tooth width)");

    auto* sweep = app.add_subcommand(
        "sweep", "Tabulate closed-form figures over a depth/finesse/drive grid");
    sweep->add_option("--config", config, "JSON config file")->required();

    auto* optimize = app.add_subcommand(
        "optimize", "Find the finesse maximizing a retrieval efficiency");
    optimize->add_option("--config", config, "JSON config file")->required();

    auto* link = app.add_subcommand(
        "link", "Evaluate an entanglement-distribution link budget");
    link->add_option("--config", config, "JSON config file")->required();

    auto* presets = app.add_subcommand("presets", "Material preset utilities");
    presets->require_subcommand(1);
    bool presets_json = false;
    auto* presets_list = presets->add_subcommand("list", "List built-in material presets");
    presets_list->add_flag("--json", presets_json, "Emit the presets as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (simulate->parsed())
            return run_simulate(config, theta0_override, alpha_override,
                                finesse_override);
        if (sweep->parsed()) return run_sweep(config);
        if (optimize->parsed()) return run_optimize(config);
        if (link->parsed()) return run_link(config);
        if (presets->parsed()) return run_presets_list(presets_json);
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const njson::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const regime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

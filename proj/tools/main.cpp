// noisefit: estimate noncentral-chi noise parameters (sigma_g, N) of 4D
// magnitude MRI data, build synthetic phantoms, and bias-correct signals.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "noisefit/background_id.hpp"
#include "noisefit/bias_correction.hpp"
#include "noisefit/errors.hpp"
#include "noisefit/local_maps.hpp"
#include "noisefit/parallel.hpp"
#include "noisefit/phantom.hpp"
#include "noisefit/version.hpp"
#include "noisefit/volume_io.hpp"

namespace nf = noisefit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

json base_metadata(const std::string& command) {
    return json{{"tool", "noisefit"}, {"version", nf::kVersion}, {"command", command}};
}

std::vector<nf::io::SliceRecord> to_records(const std::vector<nf::background::SliceResult>& results,
                                            nf::estimators::Method method) {
    std::vector<nf::io::SliceRecord> records;
    records.reserve(results.size());
    for (const auto& r : results) {
        nf::io::SliceRecord rec;
        rec.slice_index = r.slice_index;
        rec.method = nf::estimators::method_name(method);
        rec.converged = r.converged;
        if (r.estimate) {
            rec.sigma = r.estimate->sigma_g;
            rec.n_dof = r.estimate->n_dof;
            rec.voxel_count = r.mask.empty()
                                  ? 0
                                  : static_cast<std::size_t>(
                                        std::count(r.mask.begin(), r.mask.end(), std::uint8_t{1}));
        } else {
            rec.error = r.error;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

nf::Volume4D mask_volume(const nf::Volume4D& input,
                         const std::vector<nf::background::SliceResult>& results,
                         nf::background::SliceAxis axis) {
    nf::Volume4D mask(input.nx(), input.ny(), input.nz(), 1);
    mask.voxel_dims = input.voxel_dims;
    const auto ax = nf::background::resolve_axis(axis);
    for (const auto& r : results) {
        if (r.mask.empty()) continue;
        std::size_t v = 0;
        auto put = [&](std::size_t x, std::size_t y, std::size_t z) {
            mask.data[mask.spatial_index(x, y, z)] = r.mask[v++] ? 1.0 : 0.0;
        };
        if (ax == nf::background::SliceAxis::x) {
            for (std::size_t z = 0; z < input.nz(); ++z)
                for (std::size_t y = 0; y < input.ny(); ++y) put(r.slice_index, y, z);
        } else if (ax == nf::background::SliceAxis::y) {
            for (std::size_t z = 0; z < input.nz(); ++z)
                for (std::size_t x = 0; x < input.nx(); ++x) put(x, r.slice_index, z);
        } else {
            for (std::size_t y = 0; y < input.ny(); ++y)
                for (std::size_t x = 0; x < input.nx(); ++x) put(x, y, r.slice_index);
        }
    }
    return mask;
}

struct EstimateArgs {
    std::string input;
    double p = 0.05;
    int grid_length = 50;
    double n_min = 1.0;
    double n_max = 12.0;
    std::string axis = "auto";
    std::string method = "moments";
    std::string mask_out;
    std::string report_out;
    std::vector<std::size_t> exclude_volumes;
    int threads = 0;
};

int run_estimate(const EstimateArgs& args) {
    const nf::Volume4D volume = nf::io::read_volume(args.input);
    nf::background::IdentificationConfig config;
    config.p = args.p;
    config.grid_length = args.grid_length;
    config.n_min = args.n_min;
    config.n_max = args.n_max;
    config.slice_axis = nf::background::axis_from_name(args.axis);
    config.exclude_volumes = args.exclude_volumes;
    const auto method = nf::estimators::method_from_name(args.method);
    const int threads = args.threads > 0 ? args.threads : nf::default_thread_count();

    const auto results = nf::background::identify_volume(volume, config, method, threads);

    std::size_t failed = 0;
    for (const auto& r : results) {
        if (r.estimate) {
            std::printf("slice %3zu  sigma %.6g  N %.6g  voxels %zu  %s\n", r.slice_index,
                        r.estimate->sigma_g, r.estimate->n_dof,
                        static_cast<std::size_t>(
                            std::count(r.mask.begin(), r.mask.end(), std::uint8_t{1})),
                        r.converged ? "converged" : "not converged");
        } else {
            ++failed;
            std::printf("slice %3zu  failed: %s\n", r.slice_index, r.error.c_str());
        }
    }

    json meta = base_metadata("estimate");
    meta["config"] = {{"input", args.input},
                      {"p", config.p},
                      {"grid_length", config.grid_length},
                      {"n_min", config.n_min},
                      {"n_max", config.n_max},
                      {"axis", nf::background::axis_name(config.slice_axis)},
                      {"method", nf::estimators::method_name(method)},
                      {"exclude_volumes", config.exclude_volumes},
                      {"threads", threads}};
    if (!args.report_out.empty())
        nf::io::write_report(to_records(results, method), meta, args.report_out,
                             nf::io::report_format_for_path(args.report_out));
    if (!args.mask_out.empty())
        nf::io::write_volume(mask_volume(volume, results, config.slice_axis), args.mask_out,
                             nf::Dtype::u8);

    if (failed == results.size()) {
        std::fprintf(stderr, "noisefit: all %zu slices failed\n", failed);
        return kExitRuntime;
    }
    return kExitOk;
}

struct LocalArgs {
    std::string input;
    std::vector<int> window{3};
    std::string method = "moments";
    std::string sigma_out;
    std::string n_out;
    std::string report_out;
    int threads = 0;
};

int run_estimate_local(const LocalArgs& args) {
    const nf::Volume4D maps = nf::io::read_volume(args.input);
    std::array<int, 3> window{3, 3, 3};
    if (args.window.size() == 1)
        window = {args.window[0], args.window[0], args.window[0]};
    else if (args.window.size() == 3)
        window = {args.window[0], args.window[1], args.window[2]};
    else
        throw std::invalid_argument("--window takes 1 or 3 odd values");
    const auto method = nf::estimators::method_from_name(args.method);
    const int threads = args.threads > 0 ? args.threads : nf::default_thread_count();

    const auto field = nf::localmaps::estimate_field(maps, window, method, threads);
    const auto summary = nf::localmaps::field_summary(field);
    std::printf("sigma: median %.6g  mean %.6g  sd %.3g  [p5 %.6g, p95 %.6g]\n",
                summary.sigma.median, summary.sigma.mean, summary.sigma.sd, summary.sigma.p5,
                summary.sigma.p95);
    std::printf("N:     median %.6g  mean %.6g  sd %.3g  [p5 %.6g, p95 %.6g]\n",
                summary.n_dof.median, summary.n_dof.mean, summary.n_dof.sd, summary.n_dof.p5,
                summary.n_dof.p95);

    auto field_to_volume = [&](const std::vector<double>& values) {
        nf::Volume4D v(maps.nx(), maps.ny(), maps.nz(), 1);
        v.voxel_dims = maps.voxel_dims;
        v.data = values;
        for (auto& x : v.data)
            if (!std::isfinite(x)) x = 0.0; // invalid voxels stored as 0
        return v;
    };
    if (!args.sigma_out.empty())
        nf::io::write_volume(field_to_volume(field.sigma), args.sigma_out, nf::Dtype::f32);
    if (!args.n_out.empty())
        nf::io::write_volume(field_to_volume(field.n_dof), args.n_out, nf::Dtype::f32);
    if (!args.report_out.empty()) {
        json meta = base_metadata("estimate-local");
        meta["config"] = {{"input", args.input},
                          {"window", {window[0], window[1], window[2]}},
                          {"method", nf::estimators::method_name(method)},
                          {"threads", threads}};
        meta["summary"] = {
            {"valid_count", summary.valid_count},
            {"sigma",
             {{"median", summary.sigma.median},
              {"mean", summary.sigma.mean},
              {"sd", summary.sigma.sd},
              {"p5", summary.sigma.p5},
              {"p95", summary.sigma.p95}}},
            {"n_dof",
             {{"median", summary.n_dof.median},
              {"mean", summary.n_dof.mean},
              {"sd", summary.n_dof.sd},
              {"p5", summary.n_dof.p5},
              {"p95", summary.n_dof.p95}}}};
        std::ofstream out(args.report_out);
        if (!out) throw nf::IoError("cannot open " + args.report_out + " for writing");
        out << meta.dump(2) << "\n";
    }
    return kExitOk;
}

struct SimulateArgs {
    std::string spec_file;
    std::vector<std::size_t> shape{48, 48, 24};
    std::size_t k = 65;
    double snr = 30.0;
    double sigma = 0.0;
    double n_dof = 1.0;
    std::string profile = "stationary";
    std::string signal = "sphere";
    double signal_value = 600.0;
    double outside_value = 0.0;
    std::string signal_volume;
    std::uint64_t seed = 0;
    std::string out_prefix = "phantom";
    int threads = 0;
};

int run_simulate(SimulateArgs args) {
    if (!args.spec_file.empty()) {
        std::ifstream f(args.spec_file);
        if (!f) throw nf::LoadError("cannot open " + args.spec_file);
        json spec;
        f >> spec;
        if (spec.contains("shape")) args.shape = spec["shape"].get<std::vector<std::size_t>>();
        args.k = spec.value("k", args.k);
        args.snr = spec.value("snr", args.snr);
        args.sigma = spec.value("sigma", args.sigma);
        args.n_dof = spec.value("n", args.n_dof);
        args.profile = spec.value("profile", args.profile);
        args.signal = spec.value("signal", args.signal);
        args.signal_value = spec.value("signal_value", args.signal_value);
        args.outside_value = spec.value("outside_value", args.outside_value);
        args.seed = spec.value("seed", args.seed);
    }
    if (args.shape.size() != 3) throw std::invalid_argument("--shape takes 3 values");

    nf::phantom::PhantomSpec spec;
    spec.shape = {args.shape[0], args.shape[1], args.shape[2]};
    spec.k_volumes = args.k;
    spec.snr = args.snr;
    spec.sigma = args.sigma;
    spec.n_dof = args.n_dof;
    spec.tau = nf::phantom::tau_from_name(args.profile);
    spec.seed = args.seed;
    if (args.signal == "sphere")
        spec.signal = nf::phantom::SignalModel::sphere(args.signal_value, args.outside_value);
    else if (args.signal == "uniform")
        spec.signal = nf::phantom::SignalModel::uniform(args.signal_value);
    else if (args.signal == "volume")
        spec.signal = nf::phantom::SignalModel::from_volume(nf::io::read_volume(args.signal_volume));
    else
        throw std::invalid_argument("--signal must be sphere, uniform or volume");

    const int threads = args.threads > 0 ? args.threads : nf::default_thread_count();
    const auto out = nf::phantom::generate(spec, threads);

    const std::string prefix = args.out_prefix;
    nf::io::write_volume(out.noisy, prefix + "_noisy.nii", nf::Dtype::f32);
    nf::io::write_volume(out.noiseless, prefix + "_noiseless.nii", nf::Dtype::f32);
    nf::io::write_volume(out.sigma_true, prefix + "_sigma.nii", nf::Dtype::f32);
    nf::Volume4D mask(spec.shape[0], spec.shape[1], spec.shape[2], 1);
    for (std::size_t i = 0; i < mask.data.size(); ++i) mask.data[i] = out.object_mask[i];
    nf::io::write_volume(mask, prefix + "_mask.nii", nf::Dtype::u8);

    json meta = base_metadata("simulate");
    meta["config"] = {{"shape", args.shape},
                      {"k", args.k},
                      {"snr", args.snr},
                      {"n", args.n_dof},
                      {"profile", args.profile},
                      {"signal", args.signal},
                      {"signal_value", args.signal_value},
                      {"outside_value", args.outside_value},
                      {"seed", args.seed}};
    meta["sigma_g"] = out.sigma_g;
    meta["mean_signal"] = out.mean_signal;
    meta["outputs"] = {prefix + "_noisy.nii", prefix + "_noiseless.nii", prefix + "_sigma.nii",
                       prefix + "_mask.nii"};
    std::ofstream mf(prefix + "_meta.json");
    if (!mf) throw nf::IoError("cannot open " + prefix + "_meta.json for writing");
    mf << meta.dump(2) << "\n";

    std::printf("phantom written to %s_*.nii  (sigma_g = %.6g, N = %.6g)\n", prefix.c_str(),
                out.sigma_g, out.n_true);
    return kExitOk;
}

struct CorrectArgs {
    std::string input;
    std::string sigma;
    std::string n_dof = "1";
    std::string smooth = "none";
    std::string out;
    int threads = 0;
};

int run_correct(const CorrectArgs& args) {
    const nf::Volume4D volume = nf::io::read_volume(args.input);

    // scalar when the argument parses as a number, else a volume path
    auto parse_param = [&](const std::string& text,
                           std::optional<nf::Volume4D>& storage) -> nf::bias::ScalarOrField {
        try {
            std::size_t pos = 0;
            const double v = std::stod(text, &pos);
            if (pos == text.size()) return nf::bias::ScalarOrField::from_scalar(v);
        } catch (const std::exception&) {
        }
        storage = nf::io::read_volume(text);
        return nf::bias::ScalarOrField::from_field(*storage);
    };
    std::optional<nf::Volume4D> sigma_vol, n_vol;
    const auto sigma = parse_param(args.sigma, sigma_vol);
    const auto n_dof = parse_param(args.n_dof, n_vol);

    nf::bias::Smoothing smoothing;
    if (args.smooth == "none")
        smoothing = nf::bias::Smoothing::none;
    else if (args.smooth == "box3")
        smoothing = nf::bias::Smoothing::box3;
    else
        throw std::invalid_argument("--smooth must be none or box3");

    const int threads = args.threads > 0 ? args.threads : nf::default_thread_count();
    nf::bias::CorrectionStats stats;
    const auto corrected = nf::bias::correct_volume(volume, sigma, n_dof, smoothing, &stats, threads);
    nf::io::write_volume(corrected, args.out, nf::Dtype::f32);
    std::printf("corrected volume written to %s  (noise-floor clamps: %zu, non-converged: %zu)\n",
                args.out.c_str(), stats.clamped, stats.nonconverged);
    return kExitOk;
}

struct EvaluateArgs {
    std::string estimated;
    std::string truth;
    std::string mask;
    std::string axis = "auto";
    std::string out;
};

int run_evaluate(const EvaluateArgs& args) {
    const nf::Volume4D truth = nf::io::read_volume(args.truth);
    std::vector<std::uint8_t> mask;
    if (!args.mask.empty()) {
        const nf::Volume4D m = nf::io::read_volume(args.mask);
        if (m.spatial_size() != truth.spatial_size())
            throw std::invalid_argument("mask shape does not match truth volume");
        mask.resize(m.spatial_size());
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = m.data[i] != 0.0 ? 1 : 0;
    }

    nf::phantom::ErrorSummary summary;
    json per_slice = json::array();
    const bool report_input = args.estimated.size() > 4 &&
                              (args.estimated.ends_with(".json") || args.estimated.ends_with(".csv"));
    if (report_input) {
        const auto records = nf::io::read_report(args.estimated);
        const auto axis = nf::background::axis_from_name(args.axis);
        std::vector<double> estimates;
        const auto resolved = nf::background::resolve_axis(axis);
        const std::size_t n_slices = resolved == nf::background::SliceAxis::x   ? truth.nx()
                                     : resolved == nf::background::SliceAxis::y ? truth.ny()
                                                                                : truth.nz();
        estimates.assign(n_slices, std::numeric_limits<double>::quiet_NaN());
        for (const auto& r : records)
            if (r.slice_index < n_slices && r.error.empty()) estimates[r.slice_index] = r.sigma;
        summary = nf::phantom::evaluate_slicewise(estimates, truth, mask, axis);
        for (std::size_t s = 0, e = 0; s < estimates.size(); ++s) {
            if (!std::isfinite(estimates[s])) continue;
            per_slice.push_back({{"slice_index", s}, {"percent_error", summary.errors[e++]}});
        }
    } else {
        const nf::Volume4D est = nf::io::read_volume(args.estimated);
        summary = nf::phantom::evaluate_field(est, truth, mask);
    }

    std::printf("percentage error: mean %.4g  sd %.4g  median %.4g  mean|.| %.4g  (n = %zu)\n",
                summary.mean, summary.sd, summary.median, summary.mean_abs,
                summary.errors.size());
    if (!args.out.empty()) {
        json meta = base_metadata("evaluate");
        meta["config"] = {{"estimated", args.estimated},
                          {"truth", args.truth},
                          {"mask", args.mask},
                          {"axis", args.axis}};
        json j{{"metadata", meta},
               {"mean", summary.mean},
               {"sd", summary.sd},
               {"median", summary.median},
               {"mean_abs", summary.mean_abs},
               {"count", summary.errors.size()},
               {"skipped", summary.skipped}};
        if (!per_slice.empty()) j["per_slice"] = per_slice;
        std::ofstream out(args.out);
        if (!out) throw nf::IoError("cannot open " + args.out + " for writing");
        out << j.dump(2) << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"noisefit: automated noise distribution estimation for magnitude MR data"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nf::kVersion));

    EstimateArgs est;
    auto* cmd_est = app.add_subcommand(
        "estimate", "Identify noise-only voxels per slice and estimate (sigma_g, N)");
    cmd_est->add_option("input", est.input, "Input 4D volume (.nii, .nii.gz, .raw)")->required();
    cmd_est->add_option("--p", est.p, "Quantile rejection level")->capture_default_str();
    cmd_est->add_option("--grid-length", est.grid_length, "Initial sigma search grid length")
        ->capture_default_str();
    cmd_est->add_option("--nmin", est.n_min, "Lower bound on N for the first search")
        ->capture_default_str();
    cmd_est->add_option("--nmax", est.n_max, "Upper bound on N for the first search")
        ->capture_default_str();
    cmd_est->add_option("--axis", est.axis, "Slice axis: x, y, z or auto")->capture_default_str();
    cmd_est->add_option("--method", est.method, "Estimator: moments or ml")->capture_default_str();
    cmd_est->add_option("--mask-out", est.mask_out, "Write the background mask volume here");
    cmd_est->add_option("--report-out", est.report_out, "Write the per-slice report (.json/.csv)");
    cmd_est->add_option("--exclude-volumes", est.exclude_volumes,
                        "Volume indices to leave out of the sums");
    cmd_est->add_option("--threads", est.threads, "Worker threads (0 = NOISEFIT_THREADS or all)")
        ->capture_default_str();

    LocalArgs loc;
    auto* cmd_loc = app.add_subcommand(
        "estimate-local", "Estimate (sigma_g, N) fields from noise-only maps in local windows");
    cmd_loc->add_option("input", loc.input, "Noise-map 4D volume")->required();
    cmd_loc->add_option("--window", loc.window, "Odd window size (1 or 3 values)")
        ->capture_default_str()
        ->expected(1, 3);
    cmd_loc->add_option("--method", loc.method, "Estimator: moments or ml")->capture_default_str();
    cmd_loc->add_option("--sigma-out", loc.sigma_out, "Write the sigma field volume here");
    cmd_loc->add_option("--n-out", loc.n_out, "Write the N field volume here");
    cmd_loc->add_option("--report-out", loc.report_out, "Write the summary report (JSON)");
    cmd_loc->add_option("--threads", loc.threads, "Worker threads (0 = NOISEFIT_THREADS or all)")
        ->capture_default_str();

    SimulateArgs sim;
    auto* cmd_sim = app.add_subcommand("simulate", "Generate a synthetic phantom with known noise");
    cmd_sim->add_option("--spec", sim.spec_file, "JSON spec file; flags override its fields");
    cmd_sim->add_option("--shape", sim.shape, "Phantom shape (3 values)")
        ->capture_default_str()
        ->expected(3);
    cmd_sim->add_option("--k", sim.k, "Number of volumes")->capture_default_str();
    cmd_sim->add_option("--snr", sim.snr, "Signal-to-noise ratio (sigma_g = mean signal / SNR)")
        ->capture_default_str();
    cmd_sim->add_option("--sigma", sim.sigma,
                        "Explicit sigma_g (required for pure-noise phantoms)")
        ->capture_default_str();
    cmd_sim->add_option("--n", sim.n_dof, "Degrees of freedom N")->capture_default_str();
    cmd_sim->add_option("--profile", sim.profile, "Noise profile: stationary or sphere_ramp")
        ->capture_default_str();
    cmd_sim->add_option("--signal", sim.signal, "Signal model: sphere, uniform or volume")
        ->capture_default_str();
    cmd_sim->add_option("--signal-value", sim.signal_value, "Object signal value")
        ->capture_default_str();
    cmd_sim->add_option("--outside-value", sim.outside_value, "Signal outside the sphere")
        ->capture_default_str();
    cmd_sim->add_option("--signal-volume", sim.signal_volume, "Noiseless signal volume (3D)");
    cmd_sim->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
    cmd_sim->add_option("--out-prefix", sim.out_prefix, "Output file prefix")
        ->capture_default_str();
    cmd_sim->add_option("--threads", sim.threads, "Worker threads (0 = NOISEFIT_THREADS or all)")
        ->capture_default_str();

    CorrectArgs cor;
    auto* cmd_cor = app.add_subcommand("correct", "Noncentral-chi signal bias correction");
    cmd_cor->add_option("input", cor.input, "Input 4D volume")->required();
    cmd_cor->add_option("--sigma", cor.sigma, "sigma_g: scalar or field volume path")->required();
    cmd_cor->add_option("--n", cor.n_dof, "N: scalar or field volume path")->capture_default_str();
    cmd_cor->add_option("--smooth", cor.smooth, "First-moment smoothing: none or box3")
        ->capture_default_str();
    cmd_cor->add_option("--out", cor.out, "Output volume path")->required();
    cmd_cor->add_option("--threads", cor.threads, "Worker threads (0 = NOISEFIT_THREADS or all)")
        ->capture_default_str();

    EvaluateArgs eva;
    auto* cmd_eva = app.add_subcommand(
        "evaluate", "Percentage error of an estimate (report or field) against a truth field");
    cmd_eva->add_option("estimated", eva.estimated, "Per-slice report (.json/.csv) or field volume")
        ->required();
    cmd_eva->add_option("truth", eva.truth, "True sigma field volume")->required();
    cmd_eva->add_option("--mask", eva.mask, "Region mask volume");
    cmd_eva->add_option("--axis", eva.axis, "Slice axis for report input")->capture_default_str();
    cmd_eva->add_option("--out", eva.out, "Write the summary JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (cmd_est->parsed()) return run_estimate(est);
        if (cmd_loc->parsed()) return run_estimate_local(loc);
        if (cmd_sim->parsed()) return run_simulate(sim);
        if (cmd_cor->parsed()) return run_correct(cor);
        if (cmd_eva->parsed()) return run_evaluate(eva);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "noisefit: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "noisefit: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}

// memlens command-line front end.

#include "memlens/config.hpp"
#include "memlens/harness.hpp"
#include "memlens/plot.hpp"
#include "memlens/results.hpp"
#include "memlens/selftest.hpp"
#include "memlens/timing_checker.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace memlens;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kAborted = 2;

struct Invalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

PlatformConfig load(const std::string& path, std::optional<std::uint64_t> seed)
{
    auto cfg = path.empty() ? desk_platform() : load_config(path);
    if (seed)
        cfg.sweep.seed = *seed;
    return cfg;
}

std::vector<View> selected_views(const std::string& text)
{
    if (text == "all")
        return {kAllViews.begin(), kAllViews.end()};
    return {parse_view(text)};
}

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Invalid(fmt::format("cannot write '{}'", path.string()));
    f << content;
}

std::string csv_text(std::span<const CurveSample> samples)
{
    std::ostringstream s;
    write_csv(s, samples);
    return s.str();
}

std::vector<CurveSample> read_csv_file(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Invalid(fmt::format("cannot open '{}'", path));
    try {
        return read_csv(f);
    } catch (const CsvError& e) {
        throw Invalid(fmt::format("{}: {}", path, e.what()));
    }
}

std::string errors_csv(std::span<const PointResult> points)
{
    std::string out = "read_pct,pacing,error\n";
    for (const auto& p : points) {
        if (p.ok)
            continue;
        std::string msg = p.error;
        for (auto& ch : msg)
            if (ch == ',' || ch == '\n')
                ch = ';';
        out += fmt::format("{},{},{}\n", p.read_pct, p.pacing, msg);
    }
    return out;
}

nlohmann::ordered_json metadata(const PlatformConfig& cfg, std::size_t points, std::size_t failed, unsigned threads)
{
    const ClockCoupler coupler(cfg.cpu_freq_hz(), cfg.mem_freq_hz(), cfg.clock.mode);
    nlohmann::ordered_json j;
    j["tool"] = "memlens";
    j["seed"] = cfg.sweep.seed;
    j["clock"] = {
        {"mode", to_string(cfg.clock.mode)},
        {"cpu_freq_mhz", cfg.clock.cpu_freq_mhz},
        {"mem_freq_mhz", cfg.clock.mem_freq_mhz},
        {"cpu_period_as", coupler.cpu_period_as()},
        {"dram_period_as", coupler.dram_period_as()},
        {"cpu_period_rounding_as", coupler.cpu_period_rounding_as()},
        {"dram_period_rounding_as", coupler.dram_period_rounding_as()},
        {"ceil_ratio", coupler.freq_ratio()},
    };
    j["dram"] = {
        {"backend", to_string(cfg.backend)},
        {"channels", cfg.dram.channels},
        {"ranks", cfg.dram.ranks()},
        {"banks_per_rank", cfg.dram.banks_per_rank},
        {"peak_bandwidth_gbps", cfg.dram.peak_bandwidth_gbps()},
        {"controller_delay_ns", cfg.dram.controller_delay_ns},
    };
    j["map"] = format_scheme(cfg.resolved_scheme());
    j["engine"] = {
        {"cores", cfg.engine.cores},
        {"window_cycles", cfg.engine.window_cycles},
        {"imm_mode", to_string(cfg.engine.imm_mode)},
        {"imm_fixed_cycles", cfg.engine.imm_fixed_cycles},
        {"imm_initial_ns", cfg.engine.imm_initial_ns ? nlohmann::ordered_json(*cfg.engine.imm_initial_ns) : nlohmann::ordered_json(nullptr)},
        {"warmup_windows", cfg.engine.warmup_windows},
        {"weave_extension", to_string(cfg.engine.weave_extension)},
        {"traffic_pattern", to_string(cfg.engine.traffic_pattern)},
    };
    j["hierarchy"] = {
        {"noc_fixed_delay_ns", cfg.hierarchy.noc.fixed_delay_ns},
        {"mshr_per_core", cfg.hierarchy.caches.mshr_per_core},
        {"prefetch", cfg.hierarchy.prefetch.enable},
    };
    j["sweep"] = {
        {"read_pcts", cfg.sweep.read_pcts},
        {"pacing_levels", cfg.sweep.pacing_levels},
        {"windows_per_point", cfg.sweep.windows_per_point},
        {"points", points},
        {"failed_points", failed},
        {"threads", threads},
    };
    return j;
}

void dump_trace(const fs::path& dir, const PointResult& p)
{
    std::ofstream f(dir / fmt::format("trace_r{}_p{}.csv", p.read_pct, p.pacing));
    write_command_trace(f, p.trace);
}

void plot_views(const fs::path& dir, std::span<const CurveSample> samples, const std::vector<View>& views,
                const PlotBounds& bounds)
{
    for (const auto v : views) {
        const auto curves = curves_from_samples(samples, v);
        if (curves.empty())
            throw Invalid(fmt::format("no {} samples to plot", to_string(v)));
        write_file(dir / fmt::format("{}.svg", to_string(v)), plot_svg(curves, v, bounds));
    }
}

int cmd_run(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out_dir,
            std::uint32_t read_pct, std::uint32_t pacing, std::optional<std::uint32_t> windows, bool trace_dump)
{
    auto cfg = load(config, seed);
    if (windows)
        cfg.sweep.windows_per_point = *windows;
    PointOptions opts;
    opts.check_trace = trace_dump;
    opts.keep_trace = trace_dump;
    const auto p = run_point(cfg, read_pct, pacing, opts);
    if (!p.ok) {
        fmt::print(std::cerr, "point {}/{} aborted: {}\n", read_pct, pacing, p.error);
        return kAborted;
    }
    const std::vector<PointResult> points{p};
    const auto samples = samples_from(points);
    const auto text = csv_text(samples);
    std::cout << text;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "run.csv", text);
        if (trace_dump)
            dump_trace(out_dir, p);
    }
    for (const auto& v : p.violations)
        fmt::print(std::cerr, "{}\n", format_violation(v));
    return p.violations.empty() ? kOk : kInvalid;
}

int cmd_sweep(const std::string& config, std::optional<std::uint64_t> seed, const std::string& out_dir,
              const std::string& view, bool trace_dump)
{
    const auto cfg = load(config, seed);
    const auto views = selected_views(view);
    SweepOptions opts;
    opts.point.check_trace = trace_dump;
    opts.point.keep_trace = trace_dump;
    opts.threads = default_thread_count();
    const auto points = run_sweep(cfg, opts);

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const auto samples = samples_from(points);
    write_file(dir / "sweep.csv", csv_text(samples));
    std::size_t failed = 0;
    std::size_t violations = 0;
    for (const auto& p : points) {
        failed += p.ok ? 0 : 1;
        violations += p.violations.size();
        if (trace_dump && p.ok)
            dump_trace(dir, p);
        if (!p.ok)
            fmt::print(std::cerr, "point {}/{} aborted: {}\n", p.read_pct, p.pacing, p.error);
    }
    if (failed > 0)
        write_file(dir / "errors.csv", errors_csv(points));
    write_file(dir / "metadata.json", metadata(cfg, points.size(), failed, opts.threads).dump(2) + "\n");
    if (!samples.empty())
        plot_views(dir, samples, views, {});
    fmt::print("{} points, {} failed, {} timing violations; results in {}\n", points.size(), failed, violations,
               dir.string());
    if (failed > 0)
        return kAborted;
    return violations == 0 ? kOk : kInvalid;
}

int cmd_plot(const std::string& in, const std::string& out_dir, const std::string& view, std::optional<double> x_max,
             std::optional<double> y_max)
{
    const auto samples = read_csv_file(in);
    fs::create_directories(out_dir);
    plot_views(out_dir, samples, selected_views(view), {x_max, y_max});
    return kOk;
}

int cmd_compare(const std::string& candidate, const std::string& reference, const std::string& view)
{
    const auto v = parse_view(view);
    const auto cand = curves_from_samples(read_csv_file(candidate), v);
    const auto ref = curves_from_samples(read_csv_file(reference), v);
    try {
        write_compare_report(std::cout, compare(cand, ref));
    } catch (const std::invalid_argument& e) {
        throw Invalid(e.what());
    }
    return kOk;
}

int cmd_check_trace(const std::string& config, const std::string& path)
{
    const auto cfg = load(config, std::nullopt);
    std::ifstream f(path);
    if (!f)
        throw Invalid(fmt::format("cannot open '{}'", path));
    const auto trace = read_command_trace(f);
    const auto violations = verify_command_trace(trace, cfg.dram.timing);
    for (const auto& v : violations)
        fmt::print("{}\n", format_violation(v));
    fmt::print("{} commands, {} violations\n", trace.size(), violations.size());
    return violations.empty() ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"memlens: CPU-memory simulation testbed with bandwidth-latency views"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::string view = "all";
    std::optional<std::uint64_t> seed;
    bool trace_dump = false;

    auto* run = app.add_subcommand("run", "simulate one sweep point and print its samples");
    std::uint32_t read_pct = 100;
    std::uint32_t pacing = 0;
    std::optional<std::uint32_t> windows;
    run->add_option("--config", config, "platform config file");
    run->add_option("--out", out_dir, "directory for run.csv and the trace");
    run->add_option("--seed", seed, "sweep seed");
    run->add_option("--read-pct", read_pct, "percentage of reads")->check(CLI::Range(0, 100));
    run->add_option("--pacing", pacing, "idle cycles between traffic operations");
    run->add_option("--windows", windows, "measured windows");
    run->add_flag("--trace-dump", trace_dump, "dump and check the DRAM command trace");

    auto* sweep = app.add_subcommand("sweep", "run every (read mix, pacing) point");
    sweep->add_option("--config", config, "platform config file");
    sweep->add_option("--out", out_dir, "output directory")->default_val("memlens-out");
    sweep->add_option("--view", view, "views to plot: memsim|interface|app|all");
    sweep->add_option("--seed", seed, "sweep seed");
    sweep->add_flag("--trace-dump", trace_dump, "dump and check every point's command trace");

    auto* plot = app.add_subcommand("plot", "plot curves from a sweep CSV");
    std::string in_csv;
    std::optional<double> x_max;
    std::optional<double> y_max;
    plot->add_option("csv", in_csv, "sweep CSV")->required();
    plot->add_option("--out", out_dir, "output directory")->default_val(".");
    plot->add_option("--view", view, "memsim|interface|app|all");
    plot->add_option("--x-max", x_max, "bandwidth axis limit [GB/s]");
    plot->add_option("--y-max", y_max, "latency axis limit [ns]");

    auto* cmp = app.add_subcommand("compare", "compare candidate curves against a reference");
    std::string candidate;
    std::string reference;
    std::string cmp_view = "app";
    cmp->add_option("candidate", candidate, "candidate CSV")->required();
    cmp->add_option("reference", reference, "reference CSV")->required();
    cmp->add_option("--view", cmp_view, "memsim|interface|app");

    auto* check = app.add_subcommand("check-trace", "verify a dumped DRAM command trace");
    std::string trace_path;
    check->add_option("trace", trace_path, "command trace file")->required();
    check->add_option("--config", config, "platform config providing the timing");

    auto* self = app.add_subcommand("selftest", "run the invariant suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalid;
    }

    try {
        if (*run)
            return cmd_run(config, seed, out_dir, read_pct, pacing, windows, trace_dump);
        if (*sweep)
            return cmd_sweep(config, seed, out_dir, view, trace_dump);
        if (*plot)
            return cmd_plot(in_csv, out_dir, view, x_max, y_max);
        if (*cmp)
            return cmd_compare(candidate, reference, cmp_view);
        if (*check)
            return cmd_check_trace(config, trace_path);
        if (*self)
            return run_selftest(std::cout) ? kOk : kInvalid;
    } catch (const ConfigError& e) {
        fmt::print(std::cerr, "config error: {}\n", e.what());
        return kInvalid;
    } catch (const Invalid& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kInvalid;
    } catch (const std::invalid_argument& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kInvalid;
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "simulation aborted: {}\n", e.what());
        return kAborted;
    }
    return kOk;
}

#include "cxlsim/cli/presets.hpp"
#include "cxlsim/errors.hpp"
#include "cxlsim/lifecycle/checkpoint.hpp"
#include "cxlsim/stats/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>

namespace
{
    using namespace cxlsim;

    enum ExitCode
    {
        kOk = 0,
        kUsage = 1,
        kParse = 2,
        kValidation = 3,
        kRuntime = 4,
    };

    std::string default_out()
    {
        if (const char *env = std::getenv("CXLSIM_OUT"); env != nullptr && *env != '\0')
            return env;
        return "cxlsim-out";
    }

    void write_text(const std::filesystem::path &path, const std::string &text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw InvalidArgument("cannot write '" + path.string() + "'");
        out << text;
    }

    void write_outputs(const cli::PresetReport &rep, const std::string &dir)
    {
        std::filesystem::create_directories(dir);
        std::ostringstream csv;
        stats::write_csv(csv, cli::report_rows(rep));
        write_text(std::filesystem::path(dir) / "report.csv", csv.str());
        write_text(std::filesystem::path(dir) / "summary.json", rep.summary.dump(2) + "\n");
        write_text(std::filesystem::path(dir) / "manifest.json", cli::manifest(rep).dump(2) + "\n");
        std::cout << "wrote " << dir << "/report.csv, summary.json, manifest.json\n";
    }

    void print_rois(const stats::StatSnapshot &snap)
    {
        for (const auto &n : snap.nodes)
        {
            for (const auto &r : n.rois)
            {
                std::cout << "node " << n.host << " " << std::setw(10) << std::left << r.label << std::right
                          << " duration " << std::fixed << std::setprecision(1) << r.duration().ns() << " ns";
                if (r.duration() > SimTime::zero())
                {
                    std::cout << std::setprecision(2) << "  local " << stats::bandwidth(r, stats::Where::LocalController)
                              << " GB/s  remote " << stats::bandwidth(r, stats::Where::RemoteController) << " GB/s";
                    if (r.reported_bytes > 0)
                        std::cout << "  reported " << stats::bandwidth(r, stats::Where::Reported) << " GB/s";
                }
                if (r.memory_ops() > 0)
                    std::cout << std::setprecision(4) << "  remote_split " << stats::remote_split(r);
                std::cout << "\n";
            }
            for (const auto &[k, v] : n.results)
                std::cout << "node " << n.host << " " << k << " = " << v << "\n";
        }
        std::cout.unsetf(std::ios::floatfield);
    }

    cli::PresetReport single_run_report(const std::string &label, const config::ClusterConfig &cfg,
                                        const std::vector<std::string> &restore_overrides, stats::StatSnapshot snap,
                                        const cli::PresetOptions &opt)
    {
        cli::PresetReport rep;
        rep.preset = label;
        rep.options = opt;
        rep.summary = stats::summary_json(snap);
        rep.runs.push_back(cli::RunRecord{snap.run_id, cfg, restore_overrides, std::move(snap), true});
        return rep;
    }

    config::ClusterConfig load_config(const std::string &path, const cli::PresetOptions &opt)
    {
        config::ClusterConfig cfg = config::parse_config(path);
        if (opt.seed)
            cfg.seed = *opt.seed;
        for (const auto &o : opt.overrides)
            config::apply_override(cfg, o);
        cfg.threads = opt.threads;
        cfg.validate();
        return cfg;
    }

    int report_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw InvalidArgument("cannot open '" + path + "'");
        const auto rows = stats::read_csv(in);
        std::map<std::string, std::size_t> per_run;
        for (const auto &r : rows)
            ++per_run[r.run_id];
        std::cout << rows.size() << " rows in " << per_run.size() << " runs\n";
        for (const auto &r : rows)
        {
            const bool headline = r.metric == "reported_bandwidth_gbps" || r.metric == "sustained_over_peak" ||
                                  r.metric == "remote_split" || r.metric == "relative_ipc" ||
                                  r.metric == "aggregate_bandwidth_gbps" || r.metric == "littles_law_bound_gbps" ||
                                  r.metric == "remote_fraction" || r.metric == "peak_gbps" ||
                                  r.metric == "sustained_gbps";
            if (headline)
                std::cout << r.run_id << "  node=" << r.node << "  " << r.component << "." << r.metric
                          << (r.roi == "-" ? "" : "[" + r.roi + "]") << " = " << r.value << "\n";
        }
        return kOk;
    }
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cxlsim: disaggregated-memory cluster simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::version()));

    cli::PresetOptions opt;
    std::string config_path, preset, out_dir = default_out(), ckpt_path;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App *sub, bool with_seed) {
        sub->add_option("--threads", opt.threads, "Simulation worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_option("--out", out_dir, "Output directory (default: $CXLSIM_OUT or ./cxlsim-out)");
        sub->add_option("--override", opt.overrides, "Config override key=value (repeatable)");
        if (with_seed)
            sub->add_option("--seed", seed, "Random seed");
    };

    auto *calibrate = app.add_subcommand("calibrate", "Run the remote memory calibration");
    add_common(calibrate, false);
    calibrate->add_flag("--quick", opt.quick, "Shorter measurement window");

    auto *run = app.add_subcommand("run", "Run a config file or a preset");
    add_common(run, true);
    auto *cfg_opt = run->add_option("--config", config_path, "Cluster config (YAML)")->check(CLI::ExistingFile);
    auto *preset_opt = run->add_option("--preset", preset, "Preset name")->check(CLI::IsMember(cli::preset_names()));
    cfg_opt->excludes(preset_opt);
    run->add_flag("--quick", opt.quick, "Reduced problem sizes (presets only)");

    auto *ckpt = app.add_subcommand("ckpt", "Fast-forward a config to its ROI and write a checkpoint");
    ckpt->add_option("--config", config_path, "Cluster config (YAML)")->required()->check(CLI::ExistingFile);
    ckpt->add_option("--ckpt", ckpt_path, "Checkpoint file to write")->required();
    ckpt->add_option("--override", opt.overrides, "Config override key=value (repeatable)");
    ckpt->add_option("--seed", seed, "Random seed");

    auto *restore = app.add_subcommand("restore", "Restore a checkpoint and run its ROI under the timing model");
    add_common(restore, false);
    restore->add_option("--ckpt", ckpt_path, "Checkpoint file to read")->required()->check(CLI::ExistingFile);

    auto *report = app.add_subcommand("report", "Summarize a report CSV");
    std::string csv_path;
    report->add_option("csv", csv_path, "report.csv written by run/restore")->required()->check(CLI::ExistingFile);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try
    {
        if (app.got_subcommand(run) || app.got_subcommand(ckpt))
        {
            if ((run->count("--seed") > 0) || (ckpt->count("--seed") > 0))
                opt.seed = seed;
        }

        if (app.got_subcommand(calibrate))
        {
            write_outputs(cli::run_preset("calibration", opt), out_dir);
            std::cout << "calibration: see " << out_dir << "/report.csv\n";
        }
        else if (app.got_subcommand(run))
        {
            if (!preset.empty())
            {
                const auto rep = cli::run_preset(preset, opt);
                for (const auto &r : rep.runs)
                {
                    if (!r.in_csv)
                        continue;
                    std::cout << "== " << r.run_id << "\n";
                    print_rois(r.snapshot);
                }
                write_outputs(rep, out_dir);
            }
            else if (!config_path.empty())
            {
                const auto cfg = load_config(config_path, opt);
                const auto ck = lifecycle::fast_forward(cfg);
                auto snap = lifecycle::restore_and_run(ck, {}, cfg.name);
                print_rois(snap);
                write_outputs(single_run_report("config", cfg, {}, std::move(snap), opt), out_dir);
            }
            else
            {
                std::cerr << "run: one of --config or --preset is required\n";
                return kUsage;
            }
        }
        else if (app.got_subcommand(ckpt))
        {
            const auto cfg = load_config(config_path, opt);
            const auto ck = lifecycle::fast_forward(cfg);
            lifecycle::save(ck, ckpt_path);
            std::cout << "checkpoint at t=" << ck.time.ps() << " ps written to " << ckpt_path << " (config "
                      << config::config_hash(cfg) << ")\n";
        }
        else if (app.got_subcommand(restore))
        {
            const auto ck = lifecycle::load(ckpt_path);
            std::vector<std::string> ov = opt.overrides;
            ov.push_back("threads=" + std::to_string(opt.threads));
            const lifecycle::Cluster probe = lifecycle::restore(ck, ov);
            auto snap = lifecycle::restore_and_run(ck, ov, probe.config().name);
            print_rois(snap);
            write_outputs(single_run_report("restore", config::parse_config_text(ck.config_yaml, "<checkpoint>"), ov,
                                            std::move(snap), opt),
                          out_dir);
        }
        else if (app.got_subcommand(report))
        {
            return report_csv(csv_path);
        }
        return kOk;
    }
    catch (const ParseError &e)
    {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    }
    catch (const ValidationError &e)
    {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
}

#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <map>
#include <optional>

#include "commands.hpp"
#include "config.hpp"
#include "hsband/errors.hpp"
#include "hsband/selection.hpp"

namespace hsband::cli {

namespace {

// --config plus one --<key> flag per config key; flags win over the file.
struct ConfigInputs {
    std::string file;
    std::map<std::string, std::string> overrides;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* sub) {
        sub->add_option("--config", file, "flat key = value config file");
        for (const auto& key : config_keys()) {
            std::string flag = key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            options[key] = sub->add_option("--" + flag, overrides[key], "overrides config key '" + key + "'");
        }
    }

    ExperimentConfig resolve() const {
        ExperimentConfig cfg;
        if (!file.empty()) {
            for (const auto& [key, value] : read_config_file(file)) {
                set_config_value(cfg, key, value);
            }
        }
        for (const auto& key : config_keys()) {
            if (options.at(key)->count() > 0) {
                set_config_value(cfg, key, overrides.at(key));
            }
        }
        return cfg;
    }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mutual-information band selection and classification for hyperspectral cubes", "hsband"};
    app.require_subcommand(1);

    GenSyntheticArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic cube and ground truth");
    gen_cmd->add_option("--out-dir", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--informative", gen.spec.informative, "label-dependent bands");
    gen_cmd->add_option("--duplicates", gen.duplicates, "exact copies of informative bands");
    gen_cmd->add_option("--noise-bands", gen.spec.noise_bands, "label-independent bands");
    gen_cmd->add_option("--classes", gen.spec.classes, "number of classes");
    gen_cmd->add_option("--height", gen.spec.height, "rows");
    gen_cmd->add_option("--width", gen.spec.width, "columns");
    gen_cmd->add_option("--noise-level", gen.spec.noise_level, "noise std-dev on informative bands");
    gen_cmd->add_option("--seed", gen.spec.seed, "generator seed");

    ConfigInputs select_cfg;
    auto* select_cmd = app.add_subcommand("select", "select bands; writes bands.txt and trace.csv");
    select_cfg.attach(select_cmd);

    ConfigInputs classify_cfg;
    auto* classify_cmd =
        app.add_subcommand("classify", "train on the split, evaluate; writes predictions.hsg and metrics");
    classify_cfg.attach(classify_cmd);

    RenderArgs render;
    auto* render_cmd = app.add_subcommand("render-map", "render a label raster as a P6 pixmap");
    render_cmd->add_option("--predictions", render.predictions, "HSG1 raster")->required();
    render_cmd->add_option("--palette", render.palette, "CSV class,r,g,b");
    render_cmd->add_option("--output", render.output, "output .ppm (default: next to the raster)");

    ReportArgs report;
    std::optional<double> target_oa;
    auto* report_cmd = app.add_subcommand("report", "compare metrics CSVs side by side");
    report_cmd->add_option("--metrics", report.metrics, "metrics.csv files")->required();
    report_cmd->add_option("--label", report.labels, "column label per metrics file");
    report_cmd->add_option("--target-oa", target_oa, "reference OA in percent; adds a gap row");
    report_cmd->add_option("--output", report.output, "also write the table as CSV");

    SummaryArgs summary;
    auto* summary_cmd = app.add_subcommand("summary", "print container dimensions and class sizes");
    summary_cmd->add_option("--cube", summary.cube, "HSC1 cube");
    summary_cmd->add_option("--ground-truth", summary.ground_truth, "HSG1 ground truth");

    const Console io{out, err};
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        if (gen_cmd->parsed()) {
            cmd_gen_synthetic(gen, io);
        } else if (select_cmd->parsed()) {
            cmd_select(select_cfg.resolve(), io);
        } else if (classify_cmd->parsed()) {
            cmd_classify(classify_cfg.resolve(), io);
        } else if (render_cmd->parsed()) {
            cmd_render_map(render, io);
        } else if (report_cmd->parsed()) {
            report.target_oa = target_oa;
            cmd_report(report, io);
        } else if (summary_cmd->parsed()) {
            cmd_summary(summary, io);
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const SelectionAborted& e) {
        err << "error: " << e.what() << " (" << e.trace().steps.size() << " steps completed)\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace hsband::cli

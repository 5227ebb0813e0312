#include "commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "hsband/classifier.hpp"
#include "hsband/errors.hpp"
#include "hsband/selection.hpp"

namespace hsband::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
        throw FormatError(FormatErrorKind::kIo, "cannot write " + path.string());
    }
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatErrorKind::kIo, "cannot read " + path.string());
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void require_file(const fs::path& path, const std::string& what) {
    if (path.empty()) {
        throw ValidationError(what + " path is not set");
    }
    if (!fs::is_regular_file(path)) {
        throw ValidationError(what + " not found: " + path.string());
    }
}

std::string shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string percent(const std::optional<double>& v) { return v ? fixed(*v * 100.0, 2) : "NA"; }

std::string seeds_of(const ExperimentConfig& cfg) {
    return "split:" + std::to_string(cfg.split_seed) + ",selection:" + std::to_string(cfg.resolved_selection_seed()) +
           ",classifier:" + std::to_string(cfg.classifier_seed);
}

std::string config_hash(const ExperimentConfig& cfg) { return hex64(fnv1a(canonical_form(cfg))); }

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        fields.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

std::vector<std::size_t> read_bands_file(const fs::path& path, std::uint32_t total_bands) {
    require_file(path, "bands file");
    std::istringstream in(read_text(path));
    std::vector<std::size_t> bands;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::size_t b = 0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), b);
        if (ec != std::errc() || ptr != line.data() + line.size()) {
            throw ValidationError("bands file " + path.string() + ": '" + line + "' is not a band index");
        }
        if (b >= total_bands) {
            throw ValidationError("bands file lists band " + std::to_string(b) + " but the cube has " +
                                  std::to_string(total_bands) + " bands");
        }
        bands.push_back(b);
    }
    if (bands.empty()) {
        throw ValidationError("bands file " + path.string() + " is empty");
    }
    return bands;
}

const char* decision_name(Decision d) { return d == Decision::kAccepted ? "accepted" : "rejected"; }

}  // namespace

OutputLock::OutputLock(const fs::path& dir) : path_(dir / kLockName) {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        throw std::runtime_error("output directory " + dir.string() + " is in use (remove " + path_.string() +
                                 " if no other run is active)");
    }
    ::close(fd);
}

OutputLock::~OutputLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

void record_output(const fs::path& file, const std::string& command, const std::string& config_hash,
                   const std::string& seeds) {
    const fs::path log = file.parent_path() / kRunLogName;
    std::ofstream out(log, std::ios::binary | std::ios::app);
    out << "file=" << file.filename().string() << " command=" << command << " config=" << config_hash
        << " seeds=" << seeds << '\n';
    if (!out) {
        throw FormatError(FormatErrorKind::kIo, "cannot append to " + log.string());
    }
}

void cmd_gen_synthetic(const GenSyntheticArgs& args, const Console& io) {
    SyntheticSpec spec = args.spec;
    if (args.duplicates > 0 && spec.informative == 0) {
        throw ValidationError("duplicates need at least one informative band");
    }
    spec.duplicate_of.clear();
    for (std::uint32_t i = 0; i < args.duplicates; ++i) {
        spec.duplicate_of.push_back(i % spec.informative);
    }
    const SyntheticScene scene = generate_synthetic(spec);

    std::ostringstream canonical;
    canonical << "informative=" << spec.informative << "\nduplicates=" << args.duplicates
              << "\nnoise_bands=" << spec.noise_bands << "\nclasses=" << spec.classes << "\nheight=" << spec.height
              << "\nwidth=" << spec.width << "\nnoise_level=" << shortest(spec.noise_level) << "\n";
    const std::string hash = hex64(fnv1a(canonical.str()));
    const std::string seeds = "synthetic:" + std::to_string(spec.seed);

    OutputLock lock(args.out_dir);
    const fs::path cube = args.out_dir / kSyntheticCube;
    const fs::path truth = args.out_dir / kSyntheticTruth;
    write_cube(cube, scene.cube);
    record_output(cube, "gen-synthetic", hash, seeds);
    write_ground_truth(truth, scene.gt);
    record_output(truth, "gen-synthetic", hash, seeds);
    io.out << "wrote " << cube.string() << " (" << spec.height << "x" << spec.width << "x" << scene.cube.bands()
           << ") and " << truth.string() << " (" << spec.classes << " classes)\n";
}

void cmd_select(const ExperimentConfig& cfg, const Console& io) {
    if (cfg.selector == Selector::kNone) {
        throw ValidationError("no selector requested");
    }
    require_file(cfg.cube, "cube");
    require_file(cfg.ground_truth, "ground truth");
    const SelectionConfig sc = cfg.selection_config();
    sc.validate(read_cube_header(cfg.cube).bands);

    const HyperCube cube = load_cube(cfg.cube);
    const GroundTruth gt = load_ground_truth(cfg.ground_truth);
    check_compatible(cube, gt);

    std::vector<std::size_t> bands;
    std::ostringstream trace;
    trace << "step,band,relevance,pe,decision,pe_star\n";
    if (cfg.selector == Selector::kMrmr) {
        bands = mrmr_select(cube, gt, sc);
        auto mi_cfg = sc;
        mi_cfg.relevance = Relevance::kMi;
        std::map<std::size_t, double> relevance;
        for (const auto& s : rank_bands_by_relevance(cube, gt, mi_cfg)) {
            relevance[s.band] = s.score;
        }
        for (std::size_t i = 0; i < bands.size(); ++i) {
            trace << i + 1 << ',' << bands[i] << ',' << shortest(relevance[bands[i]]) << ",NA,accepted,NA\n";
        }
    } else {
        const SelectionResult r =
            cfg.selector == Selector::kWmif ? wmif_select(cube, gt, sc) : wnmipe_select(cube, gt, sc);
        bands = r.bands;
        for (std::size_t i = 0; i < r.trace.steps.size(); ++i) {
            const auto& s = r.trace.steps[i];
            trace << i + 1 << ',' << s.band << ',' << shortest(s.relevance) << ',' << shortest(s.pe) << ','
                  << decision_name(s.decision) << ',' << shortest(s.pe_star) << '\n';
        }
        for (const auto& w : r.trace.warnings) {
            io.err << "warning: " << w << '\n';
        }
    }

    std::ostringstream list;
    for (auto b : bands) {
        list << b << '\n';
    }
    const std::string hash = config_hash(cfg);
    OutputLock lock(cfg.out_dir);
    const fs::path bands_path = cfg.out_dir / "bands.txt";
    const fs::path trace_path = cfg.out_dir / "trace.csv";
    write_text(bands_path, list.str());
    record_output(bands_path, "select", hash, seeds_of(cfg));
    write_text(trace_path, trace.str());
    record_output(trace_path, "select", hash, seeds_of(cfg));
    io.out << "selected " << bands.size() << " bands:";
    for (auto b : bands) {
        io.out << ' ' << b;
    }
    io.out << '\n';
}

std::string format_metrics_csv(const ConfusionMatrix& cm, const MetricsReport& report,
                               const std::vector<std::size_t>& train_counts) {
    std::ostringstream csv;
    csv << "metric,class,train,test,value\n";
    for (std::uint32_t c = 1; c <= cm.num_classes(); ++c) {
        csv << "ICA," << c << ',' << (c - 1 < train_counts.size() ? train_counts[c - 1] : 0) << ',' << cm.row_sum(c)
            << ',' << percent(report.ica[c - 1]) << '\n';
    }
    csv << "AA,,,," << fixed(report.aa * 100.0, 2) << '\n';
    csv << "OA,,,," << fixed(report.oa * 100.0, 2) << '\n';
    csv << "Kappa,,,," << (report.kappa ? fixed(*report.kappa, 4) : "NA") << '\n';
    return csv.str();
}

void cmd_classify(const ExperimentConfig& cfg, const Console& io) {
    require_file(cfg.cube, "cube");
    require_file(cfg.ground_truth, "ground truth");
    const CubeHeader header = read_cube_header(cfg.cube);
    const std::vector<std::size_t> bands = read_bands_file(cfg.resolved_bands_file(), header.bands);

    const HyperCube cube = load_cube(cfg.cube);
    const GroundTruth gt = load_ground_truth(cfg.ground_truth);
    check_compatible(cube, gt);
    const LabelVector g = gt.label_vector();
    const TrainTestSplit split = stratified_split(gt, cfg.train_fraction, cfg.split_seed);
    for (const auto& w : split.warnings) {
        io.err << "warning: " << w << '\n';
    }

    const auto& labeled = gt.labeled_pixels();
    SampleMatrix all(labeled.size(), bands.size());
    for (std::size_t k = 0; k < bands.size(); ++k) {
        const auto band = cube.band(bands[k]);
        for (std::size_t i = 0; i < labeled.size(); ++i) {
            all(i, k) = band[labeled[i]];
        }
    }
    const auto train_pos = split.train_positions();
    const auto test_pos = split.test_positions();
    if (test_pos.empty()) {
        throw ValidationError("the split leaves no test pixels");
    }
    std::vector<std::uint16_t> train_y;
    std::vector<std::uint16_t> test_y;
    std::vector<std::size_t> train_counts(g.num_classes, 0);
    for (auto p : train_pos) {
        train_y.push_back(g.labels[p]);
        ++train_counts[g.labels[p] - 1];
    }
    for (auto p : test_pos) {
        test_y.push_back(g.labels[p]);
    }
    const SampleMatrix train_x = all.select_rows(train_pos);
    const SampleMatrix test_x = all.select_rows(test_pos);

    InductionConfig induction = cfg.induction_config();
    std::ostringstream notes;
    if (cfg.grid_search && induction.kind == InductionKind::kSvm) {
        const auto gs = grid_search(train_x, train_y, g.num_classes, induction.svm, 5, cfg.classifier_seed);
        induction.svm.c = gs.best_c;
        induction.svm.gamma = gs.best_gamma;
        notes << "Grid search (5-fold, training pixels):\n";
        for (const auto& p : gs.table) {
            notes << "  C=" << shortest(p.c) << " gamma=" << shortest(p.gamma) << " accuracy=" << fixed(p.accuracy * 100.0, 2)
                  << "%\n";
        }
        notes << "  chosen C=" << shortest(gs.best_c) << " gamma=" << shortest(gs.best_gamma) << "\n";
    }
    const InductionResult fit = fit_predict(train_x, train_y, g.num_classes, test_x, induction);
    if (!fit.converged) {
        io.err << "warning: SVM training hit the sweep cap before converging\n";
    }

    const ConfusionMatrix cm = confusion(test_y, fit.predicted, g.num_classes);
    const MetricsReport report = metrics_report(cm);

    std::vector<std::uint16_t> raster(gt.pixels(), 0);
    for (std::size_t i = 0; i < test_pos.size(); ++i) {
        raster[labeled[test_pos[i]]] = fit.predicted[i];
    }

    std::ostringstream text;
    if (induction.kind == InductionKind::kSvm) {
        text << "Classifier: SVM-RBF one-vs-one (C=" << shortest(induction.svm.c)
             << ", gamma=" << shortest(induction.svm.resolved_gamma(bands.size())) << ")\n";
    } else {
        text << "Classifier: k-NN (k=" << induction.knn_k << ")\n";
    }
    text << "Bands (" << bands.size() << "):";
    for (auto b : bands) {
        text << ' ' << b;
    }
    text << "\nTraining pixels: " << train_pos.size() << "  Test pixels: " << test_pos.size() << "\n"
         << notes.str() << "\n";
    text << std::left << std::setw(8) << "Class" << std::right << std::setw(8) << "Train" << std::setw(8) << "Test"
         << std::setw(10) << "ICA (%)" << "\n";
    for (std::uint32_t c = 1; c <= g.num_classes; ++c) {
        text << std::left << std::setw(8) << c << std::right << std::setw(8) << train_counts[c - 1] << std::setw(8)
             << cm.row_sum(c) << std::setw(10) << percent(report.ica[c - 1]) << "\n";
    }
    text << "\nAA (%)  " << fixed(report.aa * 100.0, 2) << "\nOA (%)  " << fixed(report.oa * 100.0, 2)
         << "\nKappa   " << (report.kappa ? fixed(*report.kappa, 4) : "NA") << "\n";

    const std::string hash = config_hash(cfg);
    OutputLock lock(cfg.out_dir);
    const fs::path pred_path = cfg.out_dir / "predictions.hsg";
    const fs::path csv_path = cfg.out_dir / "metrics.csv";
    const fs::path txt_path = cfg.out_dir / "metrics.txt";
    write_ground_truth(pred_path, GroundTruth(gt.height(), gt.width(), std::move(raster)));
    record_output(pred_path, "classify", hash, seeds_of(cfg));
    write_text(csv_path, format_metrics_csv(cm, report, train_counts));
    record_output(csv_path, "classify", hash, seeds_of(cfg));
    write_text(txt_path, text.str());
    record_output(txt_path, "classify", hash, seeds_of(cfg));
    io.out << "OA " << fixed(report.oa * 100.0, 2) << "%  AA " << fixed(report.aa * 100.0, 2) << "%  kappa "
           << (report.kappa ? fixed(*report.kappa, 4) : "NA") << "\n";
}

Rgb default_color(std::uint16_t label) {
    const double hue = std::fmod((label - 1) * 137.50776405003785, 360.0) / 60.0;
    const int sector = static_cast<int>(hue);
    const double f = hue - sector;
    const auto level = [](double v) { return static_cast<std::uint8_t>(std::lround(v * 255.0)); };
    const std::uint8_t up = level(f);
    const std::uint8_t down = level(1.0 - f);
    switch (sector) {
        case 0:
            return {255, up, 0};
        case 1:
            return {down, 255, 0};
        case 2:
            return {0, 255, up};
        case 3:
            return {0, down, 255};
        case 4:
            return {up, 0, 255};
        default:
            return {255, 0, down};
    }
}

std::map<std::uint16_t, Rgb> read_palette(const fs::path& path) {
    require_file(path, "palette");
    std::istringstream in(read_text(path));
    std::map<std::uint16_t, Rgb> palette;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        line = line.substr(0, line.find('#'));
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); }),
                   line.end());
        if (line.empty() || (number == 1 && !std::isdigit(static_cast<unsigned char>(line[0])))) {
            continue;
        }
        const auto fields = split_fields(line);
        std::array<unsigned, 4> v{};
        bool ok = fields.size() == 4;
        for (std::size_t i = 0; ok && i < 4; ++i) {
            const auto [ptr, ec] = std::from_chars(fields[i].data(), fields[i].data() + fields[i].size(), v[i]);
            ok = ec == std::errc() && ptr == fields[i].data() + fields[i].size() && (i == 0 || v[i] <= 255);
        }
        if (!ok || v[0] == 0 || v[0] > 65535) {
            throw ValidationError("palette line " + std::to_string(number) + ": expected class,r,g,b");
        }
        palette[static_cast<std::uint16_t>(v[0])] = {static_cast<std::uint8_t>(v[1]), static_cast<std::uint8_t>(v[2]),
                                                     static_cast<std::uint8_t>(v[3])};
    }
    return palette;
}

std::string render_ppm(const GroundTruth& raster, const std::map<std::uint16_t, Rgb>* palette) {
    if (palette) {
        std::set<std::uint16_t> missing;
        for (auto label : raster.labels()) {
            if (label != 0 && !palette->count(label)) {
                missing.insert(label);
            }
        }
        if (!missing.empty()) {
            std::string list;
            for (auto c : missing) {
                list += (list.empty() ? "" : ", ") + std::to_string(c);
            }
            throw ValidationError("palette is missing classes: " + list);
        }
    }
    std::string image = "P6\n" + std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n255\n";
    image.reserve(image.size() + raster.pixels() * 3);
    for (auto label : raster.labels()) {
        Rgb rgb{0, 0, 0};
        if (label != 0) {
            rgb = palette ? palette->at(label) : default_color(label);
        }
        image.append(reinterpret_cast<const char*>(rgb.data()), 3);
    }
    return image;
}

void cmd_render_map(const RenderArgs& args, const Console& io) {
    require_file(args.predictions, "predictions raster");
    std::optional<std::map<std::uint16_t, Rgb>> palette;
    if (!args.palette.empty()) {
        palette = read_palette(args.palette);
    }
    const GroundTruth raster = load_ground_truth(args.predictions);
    const std::string image = render_ppm(raster, palette ? &*palette : nullptr);

    fs::path output = args.output;
    if (output.empty()) {
        output = args.predictions;
        output.replace_extension(".ppm");
    }
    const fs::path dir = output.parent_path().empty() ? fs::path(".") : output.parent_path();
    const std::string hash =
        hex64(fnv1a(file_digest(args.predictions) + "|" + (args.palette.empty() ? "" : file_digest(args.palette))));
    OutputLock lock(dir);
    write_text(output, image);
    record_output(dir / output.filename(), "render-map", hash, "none");
    io.out << "wrote " << output.string() << " (" << raster.width() << "x" << raster.height() << ")\n";
}

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
    require_file(path, "metrics file");
    std::istringstream in(read_text(path));
    std::string line;
    std::vector<MetricsRow> rows;
    if (!std::getline(in, line) || line != "metric,class,train,test,value") {
        throw ValidationError(path.string() + " is not a metrics CSV");
    }
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto f = split_fields(line);
        if (f.size() != 5) {
            throw ValidationError(path.string() + ": malformed row '" + line + "'");
        }
        rows.push_back({f[0] == "ICA" ? "Class " + f[1] : f[0], f[4]});
    }
    return rows;
}

void cmd_report(const ReportArgs& args, const Console& io) {
    if (args.metrics.empty()) {
        throw ValidationError("report needs at least one metrics file");
    }
    if (!args.labels.empty() && args.labels.size() != args.metrics.size()) {
        throw ValidationError("got " + std::to_string(args.labels.size()) + " labels for " +
                              std::to_string(args.metrics.size()) + " metrics files");
    }
    std::vector<std::string> labels = args.labels;
    std::vector<std::map<std::string, std::string>> values;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < args.metrics.size(); ++i) {
        if (args.labels.empty()) {
            const auto parent = fs::absolute(args.metrics[i]).parent_path().filename().string();
            labels.push_back(parent.empty() ? args.metrics[i].stem().string() : parent);
        }
        std::map<std::string, std::string> column;
        for (const auto& row : read_metrics_csv(args.metrics[i])) {
            if (std::find(order.begin(), order.end(), row.name) == order.end()) {
                order.push_back(row.name);
            }
            column[row.name] = row.value;
        }
        values.push_back(std::move(column));
    }
    // Class rows first, in numeric order; summary rows after.
    std::vector<std::string> rows;
    std::vector<int> classes;
    for (const auto& name : order) {
        if (name.rfind("Class ", 0) == 0) {
            classes.push_back(std::stoi(name.substr(6)));
        }
    }
    std::sort(classes.begin(), classes.end());
    for (int c : classes) {
        rows.push_back("Class " + std::to_string(c));
    }
    for (const char* summary : {"AA", "OA", "Kappa"}) {
        rows.emplace_back(summary);
    }
    if (args.target_oa) {
        const std::string gap_row = "OA gap vs " + fixed(*args.target_oa, 2);
        for (auto& column : values) {
            const auto it = column.find("OA");
            if (it != column.end() && it->second != "NA") {
                const double gap = std::stod(it->second) - *args.target_oa;
                column[gap_row] = (gap >= 0 ? "+" : "") + fixed(gap, 2);
            }
        }
        rows.push_back(gap_row);
    }

    std::size_t name_width = 6;
    for (const auto& r : rows) {
        name_width = std::max(name_width, r.size());
    }
    std::ostringstream text;
    std::ostringstream csv;
    text << std::left << std::setw(static_cast<int>(name_width)) << "Metric";
    csv << "metric";
    for (const auto& l : labels) {
        text << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(8, l.size()))) << l;
        csv << ',' << l;
    }
    text << '\n';
    csv << '\n';
    for (const auto& r : rows) {
        text << std::left << std::setw(static_cast<int>(name_width)) << r;
        csv << r;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const auto it = values[i].find(r);
            const std::string v = it == values[i].end() ? "-" : it->second;
            text << "  " << std::right << std::setw(static_cast<int>(std::max<std::size_t>(8, labels[i].size()))) << v;
            csv << ',' << v;
        }
        text << '\n';
        csv << '\n';
    }
    io.out << text.str();

    if (!args.output.empty()) {
        std::string digest;
        for (const auto& m : args.metrics) {
            digest += file_digest(m) + "|";
        }
        for (const auto& l : labels) {
            digest += l + "|";
        }
        if (args.target_oa) {
            digest += shortest(*args.target_oa);
        }
        const fs::path dir = args.output.parent_path().empty() ? fs::path(".") : args.output.parent_path();
        OutputLock lock(dir);
        write_text(args.output, csv.str());
        record_output(dir / args.output.filename(), "report", hex64(fnv1a(digest)), "none");
    }
}

void cmd_summary(const SummaryArgs& args, const Console& io) {
    if (args.cube.empty() && args.ground_truth.empty()) {
        throw ValidationError("summary needs --cube and/or --ground-truth");
    }
    if (!args.cube.empty()) {
        require_file(args.cube, "cube");
        const CubeHeader h = read_cube_header(args.cube);
        io.out << "cube " << args.cube.string() << ": " << h.height << "x" << h.width << " pixels, " << h.bands
               << " bands\n";
    }
    if (!args.ground_truth.empty()) {
        require_file(args.ground_truth, "ground truth");
        const GroundTruth gt = load_ground_truth(args.ground_truth);
        const auto sizes = gt.class_sizes();
        const auto present = std::count_if(sizes.begin(), sizes.end(), [](std::size_t n) { return n > 0; });
        io.out << "ground truth " << args.ground_truth.string() << ": " << gt.height() << "x" << gt.width()
               << " pixels, " << gt.labeled_pixels().size() << " labeled, " << present << " non-empty classes\n";
        for (std::size_t c = 0; c < sizes.size(); ++c) {
            io.out << "  class " << c + 1 << ": " << sizes[c] << "\n";
        }
    }
}

}  // namespace hsband::cli

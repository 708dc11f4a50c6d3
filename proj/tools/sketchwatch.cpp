// SPDX-License-Identifier: Apache-2.0
// Command-line front end: game server, detector training and evaluation, and
// dataset utilities.
#include "sketchwatch/common/error.hpp"
#include "sketchwatch/datakit/evaluate.hpp"
#include "sketchwatch/datakit/manifest.hpp"
#include "sketchwatch/datakit/split.hpp"
#include "sketchwatch/datakit/synth.hpp"
#include "sketchwatch/detector/detector.hpp"
#include "sketchwatch/detector/train.hpp"
#include "sketchwatch/detector/weights_io.hpp"
#include "sketchwatch/server/service.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

using namespace sketchwatch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

json read_json(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(Errc::io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw Error(Errc::malformed, path + ": " + e.what());
    }
}

// {"net": "toy" | "default" | {...}, "train": {...}, "nms": {...}, "render": {...}}
struct ModelConfig {
    detector::NetConfig net = detector::NetConfig::toy();
    detector::TrainConfig train{};
    detector::NmsConfig nms{};
    strokes::RenderConfig render{};

    static ModelConfig load(const std::string &path)
    {
        ModelConfig c;
        if (path.empty())
            return c;
        const json j = read_json(path);
        try {
            if (j.contains("net")) {
                const auto &n = j["net"];
                if (n.is_string())
                    c.net = n == "default" ? detector::NetConfig{} : detector::NetConfig::toy();
                else
                    c.net = detector::NetConfig::from_json(n);
            }
            if (j.contains("train"))
                c.train = detector::TrainConfig::from_json(j["train"]);
            if (j.contains("nms")) {
                c.nms.score_threshold = j["nms"].value("score_threshold", c.nms.score_threshold);
                c.nms.iou_threshold = j["nms"].value("iou_threshold", c.nms.iou_threshold);
            }
            if (j.contains("render")) {
                const auto &r = j["render"];
                c.render.width = r.value("width", c.render.width);
                c.render.height = r.value("height", c.render.height);
                c.render.draw_thickness = r.value("draw_thickness", c.render.draw_thickness);
                c.render.erase_thickness = r.value("erase_thickness", c.render.erase_thickness);
            }
        } catch (const json::exception &e) {
            throw Error(Errc::malformed, path + ": " + e.what());
        }
        c.net.validate();
        c.train.validate();
        c.nms.validate();
        c.render.validate();
        return c;
    }
};

// Canvas at network resolution plus ground truth in the same coordinates.
detector::TrainSample to_sample(const datakit::AnnotatedSession &s, const ModelConfig &mc)
{
    const auto canvas = detector::downsample(datakit::render(s, mc.render), mc.net.input_size);
    detector::TrainSample t;
    t.image.assign(canvas.pixels.begin(), canvas.pixels.end());
    const double sx = static_cast<double>(mc.net.input_size) / mc.render.width;
    const double sy = static_cast<double>(mc.net.input_size) / mc.render.height;
    for (auto b : datakit::ground_truth_boxes(s, mc.render)) {
        b.cx *= sx;
        b.w *= sx;
        b.cy *= sy;
        b.h *= sy;
        t.boxes.push_back(b);
    }
    return t;
}

std::optional<datakit::SplitName> parse_split(const std::string &s)
{
    if (s.empty() || s == "all")
        return std::nullopt;
    return datakit::split_name_from_string(s);
}

std::shared_ptr<const detector::Detector> load_detector(const std::string &model, const ModelConfig &mc)
{
    auto net = detector::load_weights(model);
    const int size = net.config().input_size;
    auto inner = std::make_shared<detector::NetDetector>(std::move(net), mc.nms);
    return std::make_shared<detector::ResampledDetector>(std::move(inner), size);
}

int cmd_serve(const std::string &config)
{
    auto cfg = config.empty() ? server::ServiceConfig{} : server::ServiceConfig::load(config);
    cfg.apply_env();
    server::Service svc(cfg);
    svc.start();
    std::cerr << "listening on " << cfg.host << ":" << svc.port();
    if (svc.http_port())
        std::cerr << ", metrics on http://" << cfg.host << ":" << *svc.http_port() << "/metrics";
    std::cerr << std::endl;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.stop();
    std::cerr << svc.metrics_text();
    return 0;
}

int cmd_train(const std::string &manifest, const std::string &config, const std::string &out,
              const std::string &split, int epochs, const std::string &init_from)
{
    auto mc = ModelConfig::load(config);
    if (epochs > 0)
        mc.train.epochs = epochs;
    const auto data = datakit::load_dataset(manifest, parse_split(split));
    if (data.sessions.empty())
        throw Error(Errc::not_found, "no sessions to train on");
    std::vector<detector::TrainSample> samples;
    for (const auto &s : data.sessions)
        samples.push_back(to_sample(s, mc));

    detector::Network net = init_from.empty() ? detector::Network(mc.net) : detector::load_weights(init_from);
    if (init_from.empty())
        net.init(mc.train.seed);
    else if (net.config().input_size != mc.net.input_size)
        throw Error(Errc::dimension, "initial weights have a different input size");
    detector::Trainer trainer(net, mc.train);
    trainer.train(samples, [&](const detector::EpochLog &l) {
        std::cout << json{{"epoch", l.epoch}, {"loss", l.mean_loss}, {"steps", l.steps},
                          {"hard_negatives", l.hard_negatives}}
                         .dump()
                  << std::endl;
        return true;
    });
    detector::save_weights(net, out);
    std::cerr << "saved " << net.parameter_count() << " parameters to " << out << "\n";
    return 0;
}

int cmd_detect(const std::string &model, const std::string &config, const std::string &manifest,
               const std::vector<std::string> &sessions, const std::string &split)
{
    const auto mc = ModelConfig::load(config);
    const auto det = load_detector(model, mc);
    auto emit = [&](const std::string &path, const datakit::AnnotatedSession &s) {
        json boxes = json::array();
        for (const auto &b : det->detect(datakit::render(s, mc.render)))
            boxes.push_back(detector::to_json(b));
        std::cout << json{{"path", path}, {"session_id", s.session_id}, {"boxes", boxes}}.dump() << "\n";
    };
    if (!manifest.empty()) {
        const auto data = datakit::load_dataset(manifest, parse_split(split));
        for (std::size_t i = 0; i < data.sessions.size(); ++i)
            emit(data.entries[i].path, data.sessions[i]);
    }
    for (const auto &p : sessions)
        emit(p, datakit::load_session(p));
    return 0;
}

int cmd_eval(const std::string &model, const std::string &config, const std::string &manifest,
             const std::string &split, double iou, bool eleven)
{
    const auto mc = ModelConfig::load(config);
    const auto det = load_detector(model, mc);
    const auto data = datakit::load_dataset(manifest, parse_split(split));
    if (data.sessions.empty())
        std::cerr << "warning: split '" << split << "' is empty\n";
    std::vector<std::vector<detector::DetectionBox>> preds, gts;
    for (const auto &s : data.sessions) {
        preds.push_back(det->detect(datakit::render(s, mc.render)));
        gts.push_back(datakit::ground_truth_boxes(s, mc.render));
    }
    datakit::EvalOptions opts;
    opts.iou_threshold = iou;
    opts.interpolation = eleven ? datakit::Interpolation::ElevenPoint : datakit::Interpolation::AllPoint;
    const auto rep = datakit::evaluate(preds, gts, opts);
    std::cout << rep.to_json().dump(2) << "\n\n" << rep.table();
    return 0;
}

int cmd_synth(const std::string &out, std::uint64_t seed, int clean, int donors, int augmented, int size)
{
    datakit::SynthDatasetSpec spec;
    spec.seed = seed;
    spec.clean_per_phrase = clean;
    spec.donors_per_phrase = donors;
    spec.augmented_per_phrase = augmented;
    spec.synth.render.width = spec.synth.render.height = size;
    const auto sessions = datakit::synth_dataset(spec);
    datakit::SplitSpec ss;
    ss.seed = seed;
    const auto splits = datakit::split(sessions, ss);
    const auto m = datakit::write_dataset(out, sessions, splits);
    std::cerr << sessions.size() << " sessions (" << splits.train.size() << "/" << splits.val.size() << "/"
              << splits.test.size() << ") written to " << m.string() << "\n";
    return 0;
}

int cmd_render(const std::string &session, const std::string &out, int size, double thickness)
{
    const auto s = datakit::load_session(session);
    strokes::RenderConfig rc;
    rc.draw_thickness = thickness;
    auto canvas = datakit::render(s, rc);
    if (size > 0 && size != rc.width)
        canvas = detector::downsample(canvas, size);
    std::ofstream f(out, std::ios::binary);
    if (!f)
        throw Error(Errc::io, "cannot write " + out);
    strokes::write_pgm(f, canvas);
    return 0;
}

int cmd_split(const std::string &manifest, const std::string &out, double train, double val, double test,
              std::uint64_t seed)
{
    auto entries = datakit::read_manifest(manifest);
    std::vector<datakit::SplitKey> keys;
    for (const auto &e : entries)
        keys.push_back({e.phrase, e.has_annotations, e.path});
    datakit::SplitSpec spec{train, val, test, seed};
    const auto r = datakit::split(keys, spec);
    for (auto i : r.train)
        entries[i].split = datakit::SplitName::Train;
    for (auto i : r.val)
        entries[i].split = datakit::SplitName::Val;
    for (auto i : r.test)
        entries[i].split = datakit::SplitName::Test;
    // Paths stay relative to the original manifest's directory.
    const auto src_dir = fs::absolute(manifest).parent_path();
    const auto dst_dir = fs::absolute(out).parent_path();
    for (auto &e : entries)
        if (!fs::path(e.path).is_absolute())
            e.path = fs::relative(src_dir / e.path, dst_dir).string();
    datakit::write_manifest(out, entries);
    std::cerr << r.train.size() << "/" << r.val.size() << "/" << r.test.size() << " written to " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"sketchwatch: drawing game server with atypical-content monitoring"};
    app.require_subcommand(1);

    std::string config, manifest, model, out, init_from, session;
    std::string train_split = "train", detect_split = "all", eval_split = "test";
    std::vector<std::string> sessions;
    int epochs = 0, clean = 10, donors = 4, augmented = 10, size = 512;
    double iou = 0.5, ftrain = 0.7, fval = 0.15, ftest = 0.15, thickness = 4.0;
    std::uint64_t seed = 0;
    bool eleven = false;

    auto *serve = app.add_subcommand("serve", "run the game server");
    serve->add_option("-c,--config", config, "service config (JSON)")->check(CLI::ExistingFile);

    auto *train = app.add_subcommand("train", "train a detector on a dataset manifest");
    train->add_option("-m,--manifest", manifest, "dataset manifest (JSON lines)")->required()->check(CLI::ExistingFile);
    train->add_option("-c,--config", config, "model config (JSON)")->check(CLI::ExistingFile);
    train->add_option("-o,--out", out, "weights file to write")->required();
    train->add_option("--split", train_split, "train, val, test or all")->capture_default_str();
    train->add_option("--epochs", epochs, "override the configured epoch count")->check(CLI::PositiveNumber);
    train->add_option("--init", init_from, "start from these weights")->check(CLI::ExistingFile);

    auto *detect = app.add_subcommand("detect", "print one JSON line of boxes per canvas");
    detect->add_option("--model", model, "weights file")->required()->check(CLI::ExistingFile);
    detect->add_option("-c,--config", config, "model config (JSON)")->check(CLI::ExistingFile);
    detect->add_option("-m,--manifest", manifest, "dataset manifest")->check(CLI::ExistingFile);
    detect->add_option("--split", detect_split, "train, val, test or all")->capture_default_str();
    detect->add_option("sessions", sessions, "annotated session files")->check(CLI::ExistingFile);

    auto *eval = app.add_subcommand("eval", "score a detector: JSON report and a table");
    eval->add_option("--model", model, "weights file")->required()->check(CLI::ExistingFile);
    eval->add_option("-c,--config", config, "model config (JSON)")->check(CLI::ExistingFile);
    eval->add_option("-m,--manifest", manifest, "dataset manifest")->required()->check(CLI::ExistingFile);
    eval->add_option("--split", eval_split, "train, val, test or all")->capture_default_str();
    eval->add_option("--iou", iou, "match threshold")->default_val(0.5)->check(CLI::Range(0.0, 1.0));
    eval->add_flag("--eleven-point", eleven, "11-point interpolated AP");

    auto *synth = app.add_subcommand("synth", "write a synthetic annotated dataset");
    synth->add_option("-o,--out", out, "output directory")->required();
    synth->add_option("--seed", seed, "random seed")->default_val(0);
    synth->add_option("--clean", clean, "clean canvases per phrase")->default_val(10);
    synth->add_option("--donors", donors, "glyph donor canvases per phrase")->default_val(4);
    synth->add_option("--augmented", augmented, "augmented canvases per phrase")->default_val(10);
    synth->add_option("--size", size, "canvas side in pixels")->default_val(512);

    auto *render = app.add_subcommand("render", "rasterize a session to a PGM image");
    render->add_option("session", session, "annotated session file")->required()->check(CLI::ExistingFile);
    render->add_option("-o,--out", out, "PGM file")->required();
    render->add_option("--size", size, "downsample to this side")->default_val(512);
    render->add_option("--thickness", thickness, "draw stroke thickness")->default_val(4.0);

    auto *splitc = app.add_subcommand("split", "reassign train/val/test in a manifest");
    splitc->add_option("-m,--manifest", manifest, "input manifest")->required()->check(CLI::ExistingFile);
    splitc->add_option("-o,--out", out, "output manifest")->required();
    splitc->add_option("--train", ftrain, "train fraction")->default_val(0.7);
    splitc->add_option("--val", fval, "validation fraction")->default_val(0.15);
    splitc->add_option("--test", ftest, "test fraction")->default_val(0.15);
    splitc->add_option("--seed", seed, "random seed")->default_val(0);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*serve)
            return cmd_serve(config);
        if (*train)
            return cmd_train(manifest, config, out, train_split, epochs, init_from);
        if (*detect)
            return cmd_detect(model, config, manifest, sessions, detect_split);
        if (*eval)
            return cmd_eval(model, config, manifest, eval_split, iou, eleven);
        if (*synth)
            return cmd_synth(out, seed, clean, donors, augmented, size);
        if (*render)
            return cmd_render(session, out, size, thickness);
        if (*splitc)
            return cmd_split(manifest, out, ftrain, fval, ftest, seed);
    } catch (const Error &e) {
        std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

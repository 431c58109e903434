#pragma once

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sketchplay/dataset.hpp"
#include "sketchplay/engine.hpp"
#include "sketchplay/service.hpp"
#include "sketchplay/svg.hpp"
#include "sketchplay/trainer.hpp"

namespace sketchplay {

namespace cli_detail {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::json::parse(read_text(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, p.string() + ": " + e.what());
  }
}

/// Writes to `path`, or to `out` when the path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  f << text;
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
}

inline CompletionPolicy parse_policy(const std::string& name, const std::vector<std::string>& channels) {
  nlohmann::json j = {{"policy", name}};
  if (!channels.empty()) j["channels"] = channels;
  return policy_from_json(j);
}

inline Service* g_service = nullptr;

inline void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace cli_detail

/// Entry point of the `sketchplay` tool. Usage errors exit 2, failed
/// operations exit 1 with the message on `err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"sketchplay: turn-based human/machine sketching"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sketchplay 1.0");

  std::uint64_t seed = 0;
  const auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a training dataset from QuickDraw NDJSON or PNG captures");
  std::vector<std::string> ingest_in;
  std::string ingest_out, ingest_calib, ingest_label = "artist";
  DatasetConfig dcfg;
  std::array<double, 2> ingest_canvas{1100, 1600};
  ingest->add_option("--in", ingest_in, "NDJSON files, or PNG captures (with --captures)")->required();
  bool ingest_captures = false;
  ingest->add_flag("--captures", ingest_captures, "Inputs are PNG photographs of finished paintings");
  ingest->add_option("--calib", ingest_calib, "Calibration file for captures");
  ingest->add_option("--canvas", ingest_canvas, "Canvas size in mm for captures");
  ingest->add_option("--label", ingest_label, "Label for captured sketches");
  ingest->add_option("--out", ingest_out, "Dataset directory")->required();
  ingest->add_option("--max-len", dcfg.max_seq_len, "Longest sequence kept")->capture_default_str();
  ingest->add_option("--rdp", dcfg.rdp_epsilon, "Simplification tolerance")->capture_default_str();
  ingest->add_option("--train-fraction", dcfg.train_fraction)->capture_default_str();
  ingest->add_option("--val-fraction", dcfg.val_fraction)->capture_default_str();
  add_seed(ingest);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the sketcher on a dataset");
  std::string train_data, train_out, train_curve;
  SketcherConfig scfg;
  train_cmd->add_option("--data", train_data, "Dataset directory")->required();
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--curve", train_curve, "Loss curve CSV");
  train_cmd->add_option("--hidden", scfg.hidden_size)->capture_default_str();
  train_cmd->add_option("--mixtures", scfg.num_mixtures)->capture_default_str();
  train_cmd->add_option("--epochs", scfg.epochs)->capture_default_str();
  train_cmd->add_option("--batch", scfg.batch_size)->capture_default_str();
  train_cmd->add_option("--lr", scfg.learning_rate)->capture_default_str();
  train_cmd->add_option("--clip", scfg.grad_clip)->capture_default_str();
  add_seed(train_cmd);

  // finetune
  auto* ft = app.add_subcommand("finetune", "Continue training a checkpoint on an artist dataset");
  std::string ft_ckpt, ft_data, ft_base, ft_out, ft_curve;
  std::size_t ft_epochs = 5;
  double ft_factor = 0.1;
  ft->add_option("--checkpoint", ft_ckpt)->required();
  ft->add_option("--data", ft_data, "Artist dataset directory")->required();
  ft->add_option("--base-data", ft_base, "Base dataset whose validation loss is reported");
  ft->add_option("--out", ft_out, "Checkpoint path")->required();
  ft->add_option("--curve", ft_curve, "Loss curve CSV");
  ft->add_option("--epochs", ft_epochs)->capture_default_str();
  ft->add_option("--factor", ft_factor, "Learning-rate multiplier")->capture_default_str();
  add_seed(ft);

  // complete
  auto* comp = app.add_subcommand("complete", "Complete a sketch JSON; writes the suggestion and an SVG");
  std::string comp_in, comp_ckpt, comp_out, comp_svg, comp_policy = "receptor";
  std::vector<std::string> comp_channels;
  std::size_t comp_amount = 1;
  double comp_temp = 0.0;
  comp->add_option("--in", comp_in, "Sketch JSON")->required();
  comp->add_option("--checkpoint", comp_ckpt)->required();
  comp->add_option("--policy", comp_policy)->check(CLI::IsMember({"emitter", "receptor", "custom"}))->capture_default_str();
  comp->add_option("--channels", comp_channels, "Channels for the custom policy");
  comp->add_option("--amount", comp_amount)->capture_default_str();
  comp->add_option("--temperature", comp_temp)->capture_default_str();
  comp->add_option("--out", comp_out, "Suggestion JSON (default stdout)");
  comp->add_option("--svg", comp_svg, "SVG of the sketch with the suggestion");
  add_seed(comp);

  // vectorize
  auto* vec = app.add_subcommand("vectorize", "Turn a canvas photograph into sketch JSON");
  std::string vec_in, vec_calib, vec_out, vec_debug, vec_palette;
  std::array<double, 2> vec_canvas{1100, 1600};
  vec->add_option("--in", vec_in, "PNG capture")->required();
  vec->add_option("--calib", vec_calib, "Calibration file (camera->canvas)");
  vec->add_option("--canvas", vec_canvas, "Canvas size in mm");
  vec->add_option("--palette", vec_palette, "Palette override JSON");
  vec->add_option("--debug-dir", vec_debug, "Write intermediate masks here");
  vec->add_option("--out", vec_out, "Sketch JSON (default stdout)");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Solve frame maps from a correspondence file");
  std::string cal_in, cal_out;
  cal->add_option("--in", cal_in, "Correspondence JSON")->required();
  cal->add_option("--out", cal_out, "Calibration JSON (default stdout)");

  // replay
  auto* rep = app.add_subcommand("replay", "Fold a session journal into its state");
  std::string rep_journal, rep_out, rep_svg;
  rep->add_option("--journal", rep_journal, "Journal (.jsonl)")->required();
  rep->add_option("--out", rep_out, "State JSON (default stdout)");
  rep->add_option("--svg", rep_svg, "SVG of the final painting");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1", data_dir = "data", serve_ckpt, serve_calib, serve_palette, port_file,
              log_level = "info";
  int port = 8080;
  std::array<std::size_t, 2> projector{1920, 1080};
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "0 picks a free port")->capture_default_str();
  serve->add_option("--data-dir", data_dir)->capture_default_str();
  serve->add_option("--checkpoint", serve_ckpt);
  serve->add_option("--calib", serve_calib);
  serve->add_option("--palette", serve_palette, "Palette override JSON");
  serve->add_option("--projector", projector, "Projector frame size in px");
  serve->add_option("--port-file", port_file, "Write the bound port here once listening");
  serve->add_option("--log-level", log_level)->check(CLI::IsMember({"quiet", "info", "debug"}))->capture_default_str();
  add_seed(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "sketchplay 1.0\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ingest) {
      std::vector<LabeledSketch> sketches;
      if (ingest_captures) {
        const CanvasSize canvas{ingest_canvas[0], ingest_canvas[1]};
        std::vector<std::filesystem::path> paths(ingest_in.begin(), ingest_in.end());
        std::optional<Homography> px_to_mm;
        if (!ingest_calib.empty()) px_to_mm = load_calibration(ingest_calib).frames.get(Frame::Camera, Frame::Canvas);
        ArchiveResult r;
        if (px_to_mm) {
          r = ingest_artist_archive(paths, *px_to_mm, ColorPalette{}, canvas);
        } else {
          // Without a calibration each photograph is taken to show the canvas exactly.
          for (std::size_t i = 0; i < paths.size(); ++i) {
            try {
              const Raster img = read_png(paths[i]);
              const auto h = Homography::scaling(canvas.width / static_cast<double>(img.width),
                                                 canvas.height / static_cast<double>(img.height));
              r.sketches.push_back(vectorize(img, ColorPalette{}, h, canvas));
            } catch (const std::exception& e) {
              r.sketches.push_back(std::nullopt);
              r.failures.push_back({i, e.what()});
            }
          }
        }
        for (const auto& f : r.failures) err << "skipped " << paths[f.index].string() << ": " << f.message << "\n";
        for (const auto& s : r.sketches)
          if (s) sketches.push_back({*s, ingest_label});
      } else {
        for (const auto& f : ingest_in) {
          std::ifstream in(f);
          if (!in) throw Error(ErrorCode::Io, "cannot open " + f);
          auto part = read_quickdraw(in);
          sketches.insert(sketches.end(), part.begin(), part.end());
        }
      }
      dcfg.seed = seed;
      const Dataset ds = build_dataset(sketches, dcfg);
      save_dataset(ds, ingest_out);
      out << nlohmann::json{{"train", ds.train.size()},
                            {"val", ds.val.size()},
                            {"dropped", ds.report.dropped},
                            {"offset_scale", ds.offset_scale}}
                 .dump()
          << "\n";
      return 0;
    }

    if (*train_cmd) {
      scfg.seed = seed;
      const Dataset ds = load_dataset(train_data);
      TrainOptions opts;
      opts.checkpoint_path = train_out;
      if (!train_curve.empty()) opts.curve_path = train_curve;
      opts.on_epoch = [&](const EpochLoss& e) {
        err << "epoch " << e.epoch << " train_nll " << e.train_nll;
        if (e.val_nll) err << " val_nll " << *e.val_nll;
        err << "\n";
      };
      const auto r = train(ds, scfg, opts);
      const std::string id = save_checkpoint(train_out, r.params, scfg, ds.offset_scale);
      nlohmann::json curve = nlohmann::json::array();
      for (const auto& e : r.curve) curve.push_back(e.train_nll);
      out << nlohmann::json{{"checkpoint", train_out}, {"id", id}, {"initial_train_nll", r.initial_train_nll},
                            {"train_nll", curve}}
                 .dump()
          << "\n";
      return 0;
    }

    if (*ft) {
      const Checkpoint ck = load_checkpoint(ft_ckpt);
      const Dataset artist = load_dataset(ft_data);
      std::optional<Dataset> base;
      if (!ft_base.empty()) base = load_dataset(ft_base);
      SketcherConfig c = ck.config;
      c.epochs = ft_epochs;
      c.fine_tune_factor = ft_factor;
      c.seed = seed;
      TrainOptions opts;
      if (!ft_curve.empty()) opts.curve_path = ft_curve;
      const auto rep_ft = fine_tune(ck.params, artist, c, base ? &base->val : nullptr, opts);
      const std::string id = save_checkpoint(ft_out, rep_ft.result.params, c, ck.offset_scale);
      nlohmann::json j = {{"checkpoint", ft_out},
                          {"id", id},
                          {"artist_val_before", rep_ft.artist_val_before},
                          {"artist_val_after", rep_ft.artist_val_after}};
      if (rep_ft.base_val_before) j["base_val_before"] = *rep_ft.base_val_before;
      if (rep_ft.base_val_after) j["base_val_after"] = *rep_ft.base_val_after;
      out << j.dump() << "\n";
      return 0;
    }

    if (*comp) {
      const Sketch sketch = sketch_from_json(read_json(comp_in));
      validate_sketch(sketch);
      const ModelCompleter model(load_checkpoint(comp_ckpt));
      CompletionRequest req{parse_policy(comp_policy, comp_channels), comp_amount, comp_temp, seed};
      const PendingSuggestion p = propose(sketch.strokes, sketch.canvas, model, req);
      emit(comp_out, to_json(p).dump(2) + "\n", out);
      if (!comp_svg.empty()) {
        Sketch both = sketch;
        both.strokes.insert(both.strokes.end(), p.proposal.strokes.begin(), p.proposal.strokes.end());
        emit(comp_svg, to_svg(both), out);
      }
      return 0;
    }

    if (*vec) {
      const CanvasSize canvas{vec_canvas[0], vec_canvas[1]};
      const Raster img = read_png(vec_in);
      const Homography px_to_mm =
          vec_calib.empty() ? Homography::scaling(canvas.width / static_cast<double>(img.width),
                                                  canvas.height / static_cast<double>(img.height))
                            : load_calibration(vec_calib).frames.get(Frame::Camera, Frame::Canvas);
      const ColorPalette palette = vec_palette.empty() ? ColorPalette{} : palette_from_json(read_json(vec_palette));
      VisionOptions opts;
      if (!vec_debug.empty()) {
        opts.debug_dir = vec_debug;
        std::filesystem::create_directories(vec_debug);
      }
      Sketch s = vectorize(img, palette, px_to_mm, canvas, opts);
      for (auto& st : s.strokes) {
        for (auto& p : st.points) p = clamp_to_canvas(p, canvas);
        st.points = merge_duplicates(std::move(st.points));
      }
      emit(vec_out, to_json(s).dump(2) + "\n", out);
      return 0;
    }

    if (*cal) {
      const Calibration c = calibrate(correspondences_from_json(read_json(cal_in)));
      emit(cal_out, to_json(c).dump(2) + "\n", out);
      return 0;
    }

    if (*rep) {
      const Session s = replay(load_journal(rep_journal));
      emit(rep_out, to_json(s).dump() + "\n", out);
      if (!rep_svg.empty()) emit(rep_svg, to_svg(s.sketch()), out);
      return 0;
    }

    if (*serve) {
      EngineConfig cfg;
      cfg.data_dir = data_dir;
      if (!serve_ckpt.empty()) cfg.checkpoint = serve_ckpt;
      if (!serve_calib.empty()) cfg.calibration = serve_calib;
      if (!serve_palette.empty()) cfg.palette = read_json(serve_palette);
      cfg.projector_width = projector[0];
      cfg.projector_height = projector[1];
      Engine engine(cfg);
      Service service(engine);
      if (log_level != "quiet")
        service.server().set_logger([&, debug = log_level == "debug"](const httplib::Request& req,
                                                                       const httplib::Response& res) {
          err << req.method << " " << req.path << " " << res.status;
          if (debug && !req.body.empty() && req.body.size() < 4096) err << " " << req.body;
          err << std::endl;
        });
      int bound = port;
      if (port == 0) bound = service.bind_to_any_port(host);
      else if (!service.bind(host, port)) bound = -1;
      if (bound < 0) throw Error(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
      if (!port_file.empty()) emit(port_file, std::to_string(bound) + "\n", out);
      err << "listening on " << host << ":" << bound << std::endl;
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      service.listen_after_bind();
      g_service = nullptr;
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace sketchplay

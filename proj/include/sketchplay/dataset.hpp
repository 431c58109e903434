#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchplay/error.hpp"
#include "sketchplay/rdp.hpp"
#include "sketchplay/rng.hpp"
#include "sketchplay/sketch.hpp"
#include "sketchplay/stroke5.hpp"

namespace sketchplay {

/// One drawing ready for the sketcher: normalized rows padded with End rows.
struct TrainingExample {
  std::vector<Stroke5Row> rows;
  std::size_t true_len = 0;
  std::string label;

  friend bool operator==(const TrainingExample&, const TrainingExample&) = default;
};

struct DatasetConfig {
  std::size_t max_seq_len = 250;
  double rdp_epsilon = 2.0;
  double train_fraction = 0.8;
  double val_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (max_seq_len < 2) throw Error(ErrorCode::InvalidInput, "max_seq_len must be at least 2");
    if (rdp_epsilon < 0.0) throw Error(ErrorCode::InvalidInput, "rdp_epsilon must be non-negative");
    if (!(train_fraction > 0.0 && train_fraction < 1.0) || !(val_fraction > 0.0 && val_fraction < 1.0))
      throw Error(ErrorCode::InvalidInput, "split fractions must lie in (0, 1)");
    if (train_fraction + val_fraction > 1.0 + 1e-12)
      throw Error(ErrorCode::InvalidInput, "split fractions must sum to at most 1");
  }
};

struct LabeledSketch {
  Sketch sketch;
  std::string label;
};

/// Parses one line of the simplified QuickDraw NDJSON: "drawing" holds one
/// [xs, ys] pair per stroke in raw dataset units. Strokes come back Black.
inline LabeledSketch parse_quickdraw_line(const std::string& text, std::size_t line_number = 1) {
  const std::string where = "line " + std::to_string(line_number);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, where + ": invalid JSON", e.what());
  }
  if (!j.is_object() || !j.contains("drawing"))
    throw Error(ErrorCode::Parse, where + ": missing \"drawing\" field");
  const auto& drawing = j["drawing"];
  if (!drawing.is_array()) throw Error(ErrorCode::Parse, where + ": \"drawing\" must be an array");

  LabeledSketch out;
  out.label = j.value("word", std::string{});
  double max_x = 255.0;
  double max_y = 255.0;
  for (const auto& stroke : drawing) {
    if (!stroke.is_array() || stroke.size() < 2 || !stroke[0].is_array() || !stroke[1].is_array())
      throw Error(ErrorCode::Parse, where + ": stroke must be [xs, ys]");
    const auto& xs = stroke[0];
    const auto& ys = stroke[1];
    if (xs.size() != ys.size())
      throw Error(ErrorCode::Parse, where + ": ragged stroke (xs and ys differ in length)");
    Stroke s{{}, PlayerChannel::Black};
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!xs[k].is_number() || !ys[k].is_number())
        throw Error(ErrorCode::Parse, where + ": coordinates must be numbers");
      const Point p{xs[k].get<double>(), ys[k].get<double>()};
      if (p.x < 0.0 || p.y < 0.0 || !is_finite(p))
        throw Error(ErrorCode::Parse, where + ": coordinates must be finite and non-negative");
      max_x = std::max(max_x, p.x);
      max_y = std::max(max_y, p.y);
      s.points.push_back(p);
    }
    s.points = merge_duplicates(std::move(s.points));
    if (!s.points.empty()) out.sketch.strokes.push_back(std::move(s));
  }
  out.sketch.canvas = {max_x, max_y};
  return out;
}

/// Reads every non-blank line; a malformed line aborts with its line number.
inline std::vector<LabeledSketch> read_quickdraw(std::istream& in) {
  std::vector<LabeledSketch> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_quickdraw_line(line, n));
  }
  return out;
}

struct DatasetReport {
  std::size_t input_count = 0;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_indices;
};

struct Dataset {
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> val;
  double offset_scale = 1.0;
  std::size_t max_seq_len = 250;
  std::uint64_t seed = 0;
  DatasetReport report;
};

inline Sketch simplify_sketch(const Sketch& s, double epsilon) {
  Sketch out = merge_duplicates(s);
  for (auto& stroke : out.strokes) stroke.points = rdp_simplify(stroke.points, epsilon);
  return out;
}

inline TrainingExample pad_example(std::vector<Stroke5Row> rows, std::size_t max_len, std::string label) {
  TrainingExample ex;
  ex.true_len = rows.size();
  ex.rows = std::move(rows);
  ex.rows.resize(max_len, Stroke5Row::end());
  ex.label = std::move(label);
  return ex;
}

/// Simplifies, encodes, filters by length, splits deterministically, and
/// normalizes offsets by the spread of the training split.
inline Dataset build_dataset(const std::vector<LabeledSketch>& sketches, const DatasetConfig& cfg) {
  cfg.validate();
  if (sketches.size() < 2) throw Error(ErrorCode::InvalidInput, "at least 2 sketches are required");

  Dataset ds;
  ds.max_seq_len = cfg.max_seq_len;
  ds.seed = cfg.seed;
  ds.report.input_count = sketches.size();

  struct Encoded {
    std::vector<Stroke5Row> rows;
    std::string label;
  };
  std::vector<Encoded> kept;
  for (std::size_t i = 0; i < sketches.size(); ++i) {
    const Sketch simple = simplify_sketch(sketches[i].sketch, cfg.rdp_epsilon);
    std::size_t full_len = 1;
    for (std::size_t k = 0; k < simple.strokes.size(); ++k)
      full_len += detail::encoded_length(simple.strokes[k], k == 0);
    if (full_len > cfg.max_seq_len) {
      ++ds.report.dropped;
      ds.report.dropped_indices.push_back(i);
      continue;
    }
    kept.push_back({to_stroke5(simple, cfg.max_seq_len), sketches[i].label});
  }
  if (kept.empty())
    throw Error(ErrorCode::EmptyDataset, "every sketch exceeds max_seq_len",
                std::to_string(ds.report.dropped) + " dropped");

  std::vector<std::size_t> order(kept.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(order);

  const auto n = static_cast<double>(kept.size());
  std::size_t n_train = std::min(kept.size(), static_cast<std::size_t>(std::llround(n * cfg.train_fraction)));
  n_train = std::max<std::size_t>(n_train, 1);
  const std::size_t n_val = std::min(kept.size() - n_train,
                                     static_cast<std::size_t>(std::llround(n * cfg.val_fraction)));

  std::vector<const std::vector<Stroke5Row>*> train_rows;
  for (std::size_t i = 0; i < n_train; ++i) train_rows.push_back(&kept[order[i]].rows);
  ds.offset_scale = offset_scale(train_rows);

  const double inv = 1.0 / ds.offset_scale;
  for (std::size_t i = 0; i < n_train + n_val; ++i) {
    auto& e = kept[order[i]];
    auto ex = pad_example(scale_offsets(e.rows, inv), cfg.max_seq_len, e.label);
    (i < n_train ? ds.train : ds.val).push_back(std::move(ex));
  }
  return ds;
}

// On disk a dataset is a directory holding manifest.json
// {count, offset_scale, dropped, seed, max_seq_len, train, val} and rows.json
// {train: [{label, rows}], val: [...]} with only the true_len rows stored;
// padding is restored on load.

inline void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const nlohmann::json manifest = {{"count", ds.train.size() + ds.val.size()},
                                   {"train", ds.train.size()},
                                   {"val", ds.val.size()},
                                   {"offset_scale", ds.offset_scale},
                                   {"dropped", ds.report.dropped},
                                   {"seed", ds.seed},
                                   {"max_seq_len", ds.max_seq_len}};
  auto dump_split = [](const std::vector<TrainingExample>& split) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& ex : split) {
      std::vector<Stroke5Row> rows(ex.rows.begin(), ex.rows.begin() + static_cast<std::ptrdiff_t>(ex.true_len));
      arr.push_back({{"label", ex.label}, {"rows", rows_to_json(rows)}});
    }
    return arr;
  };
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  std::ofstream rows_out(dir / "rows.json");
  rows_out << nlohmann::json{{"train", dump_split(ds.train)}, {"val", dump_split(ds.val)}}.dump() << '\n';
  if (!rows_out) throw Error(ErrorCode::Io, "cannot write " + (dir / "rows.json").string());
}

inline Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  std::ifstream rf(dir / "rows.json");
  if (!mf || !rf) throw Error(ErrorCode::Io, "dataset directory incomplete: " + dir.string());
  nlohmann::json manifest;
  nlohmann::json rows;
  try {
    manifest = nlohmann::json::parse(mf);
    rows = nlohmann::json::parse(rf);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::Parse, "malformed dataset files in " + dir.string(), e.what());
  }
  Dataset ds;
  ds.offset_scale = manifest.at("offset_scale").get<double>();
  ds.seed = manifest.at("seed").get<std::uint64_t>();
  ds.max_seq_len = manifest.at("max_seq_len").get<std::size_t>();
  ds.report.dropped = manifest.at("dropped").get<std::size_t>();
  auto load_split = [&](const nlohmann::json& arr, std::vector<TrainingExample>& split) {
    for (const auto& e : arr)
      split.push_back(pad_example(rows_from_json(e.at("rows")), ds.max_seq_len, e.value("label", "")));
  };
  load_split(rows.at("train"), ds.train);
  load_split(rows.at("val"), ds.val);
  return ds;
}

}  // namespace sketchplay

#pragma once

// Dataset ingestion and frozen-encoder frontend. Raw media decoding is out of
// scope: samples carry pre-decoded per-frame feature vectors (inline in the
// manifest or in SMFT files) plus the raw utterance text. Synthetic encoders
// stand in for the pre-trained models so the pipeline runs anywhere; an
// adapter registry hooks in real encoders.

#include <nlohmann/json.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semanticmac/config.hpp"
#include "semanticmac/io.hpp"
#include "semanticmac/labels.hpp"
#include "semanticmac/util.hpp"

namespace smac {

struct UtteranceSample {
  std::string sample_id;
  std::string text;
  Matrix audio_frames;   // f~_a x d_a (raw stream features)
  Matrix vision_frames;  // f~_v x d_v
  double duration_s = 0.0;
  TaskLabel label;
  Split split = Split::train;
  std::optional<std::string> dialogue_id;
  std::optional<int> turn_index;
};

struct ModalityEmbeddings {
  Modality modality = Modality::text;
  Matrix tokens;  // f~_u x d_u
  int frame_count() const { return static_cast<int>(tokens.rows()); }
};

/// Token matrix plus validity mask, as produced by the text encoder.
struct TextEncoding {
  Matrix tokens;              // f~_t x d_t
  std::vector<int> mask;      // 1 = real token, 0 = padding
  std::vector<std::string> words;
};

struct DatasetManifest {
  std::vector<UtteranceSample> records;
  TaskSpec task;
  std::string version = "1";

  std::vector<int> split_indices(Split s) const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(records.size()); ++i)
      if (records[i].split == s) out.push_back(i);
    return out;
  }
};

// ------------------------------------------------------------ frame sampling

/// Picks the source frames nearest to the uniform grid {0, 1/rate, ...}
/// within [0, duration]; ties go to the earlier frame, duplicates collapse
/// while preserving order. A non-positive duration yields the single frame
/// nearest t=0.
inline std::vector<int> sample_frames(double duration_s, double rate_hz,
                                      const std::vector<double>& source_frame_times) {
  require(rate_hz > 0.0, "sample_frames: rate must be > 0");
  require(!source_frame_times.empty(), "no frames");
  for (size_t i = 1; i < source_frame_times.size(); ++i)
    require(source_frame_times[i] >= source_frame_times[i - 1],
            "sample_frames: source times must be sorted ascending");

  auto nearest = [&](double t) {
    auto it = std::lower_bound(source_frame_times.begin(), source_frame_times.end(), t);
    int hi = static_cast<int>(it - source_frame_times.begin());
    if (hi == 0) return 0;
    if (hi == static_cast<int>(source_frame_times.size())) return hi - 1;
    double d_lo = t - source_frame_times[hi - 1];
    double d_hi = source_frame_times[hi] - t;
    return d_lo <= d_hi ? hi - 1 : hi;  // earlier frame wins ties
  };

  int grid_points = duration_s <= 0.0
                        ? 1
                        : static_cast<int>(std::floor(duration_s * rate_hz)) + 1;
  grid_points = std::min(grid_points, static_cast<int>(source_frame_times.size()));
  std::vector<int> out;
  out.reserve(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    int idx = nearest(static_cast<double>(g) / rate_hz);
    if (out.empty() || out.back() != idx) {
      if (std::find(out.begin(), out.end(), idx) == out.end()) out.push_back(idx);
    }
  }
  return out;
}

/// Uniformly re-samples to exactly `count` indices (repeats allowed when the
/// source is shorter). Used for the fixed-frame comparison arm and the
/// max_frames cap.
inline std::vector<int> resample_to_fixed(int source_count, int count) {
  require(source_count >= 1 && count >= 1, "resample_to_fixed: counts must be >= 1");
  std::vector<int> out(count);
  if (count == 1) {
    out[0] = 0;
    return out;
  }
  for (int i = 0; i < count; ++i) {
    double pos = static_cast<double>(i) * (source_count - 1) / (count - 1);
    out[i] = static_cast<int>(std::llround(pos));
  }
  return out;
}

// ------------------------------------------------------------------ encoders

using EncoderAdapter = std::function<Matrix(const UtteranceSample&, const EncoderSpec&)>;

/// User hook for real (external) encoders, keyed by adapter_id.
class AdapterRegistry {
 public:
  static AdapterRegistry& instance() {
    static AdapterRegistry r;
    return r;
  }
  void register_adapter(const std::string& id, EncoderAdapter fn) { adapters_[id] = std::move(fn); }
  const EncoderAdapter& get(const std::string& id) const {
    auto it = adapters_.find(id);
    require(it != adapters_.end(), "encoder adapter '" + id + "' not registered");
    return it->second;
  }

 private:
  std::map<std::string, EncoderAdapter> adapters_;
};

namespace detail {

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream iss(text);
  std::string w;
  while (iss >> w) words.push_back(w);
  if (words.empty()) words.push_back("<empty>");
  return words;
}

inline Matrix word_hash_rows(const std::vector<std::string>& words, int dim, std::uint64_t seed) {
  Matrix m(static_cast<int>(words.size()), dim);
  for (size_t i = 0; i < words.size(); ++i) {
    auto rng = seeded_rng(seed, "word", fnv1a(words[i]));
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int j = 0; j < dim; ++j) m(static_cast<int>(i), j) = dist(rng);
  }
  return m;
}

/// Seeded unit direction per (modality, seed); regression means live on the
/// +/- ray of this direction so antipodal labels give antipodal means.
inline Vector modality_direction(Modality mod, int dim, std::uint64_t seed) {
  auto rng = seeded_rng(seed, "label-mean", fnv1a(to_string(mod)));
  Vector v(dim);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int j = 0; j < dim; ++j) v(j) = dist(rng);
  double n = v.norm();
  require(n > 0, "degenerate modality direction");
  return v / n;
}

inline Vector class_mean(Modality mod, int cls, int dim, std::uint64_t seed) {
  auto rng = seeded_rng(seed, "class-mean", fnv1a(to_string(mod)) * 1315423911ULL + cls);
  Vector v(dim);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int j = 0; j < dim; ++j) v(j) = dist(rng);
  return 2.0 * v / std::max(v.norm(), 1e-12);
}

inline Vector label_mean(const TaskLabel& label, Modality mod, int dim, std::uint64_t seed) {
  switch (label.type) {
    case TaskLabel::Type::score:
      return (label.score / 3.0) * 2.0 * modality_direction(mod, dim, seed);
    case TaskLabel::Type::single_class:
      return class_mean(mod, label.cls, dim, seed);
    case TaskLabel::Type::class_set: {
      Vector sum = Vector::Zero(dim);
      for (int c : label.classes) sum += class_mean(mod, c, dim, seed);
      return sum / static_cast<double>(label.classes.size());
    }
  }
  return Vector::Zero(dim);
}

}  // namespace detail

/// Number of tokens the requested modality has before encoding (words for
/// text, raw frames otherwise).
inline int raw_token_count(const UtteranceSample& s, Modality mod) {
  switch (mod) {
    case Modality::text: return static_cast<int>(detail::split_words(s.text).size());
    case Modality::audio: return static_cast<int>(s.audio_frames.rows());
    case Modality::vision: return static_cast<int>(s.vision_frames.rows());
  }
  return 0;
}

/// Frame-index selection applied before encoding: the 2 fps-style grid
/// sampling (when enabled), the fixed-frame arm, then the max_frames cap.
inline std::vector<int> select_frames(const UtteranceSample& s, Modality mod,
                                      const FrontendConfig& fc) {
  int n = raw_token_count(s, mod);
  require(n >= 1, "sample '" + s.sample_id + "': no " + to_string(mod) + " frames");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;

  if (mod != Modality::text) {
    if (fc.fixed_frames > 0) {
      idx = resample_to_fixed(n, fc.fixed_frames);
    } else if (fc.resample_rate_hz > 0.0) {
      std::vector<double> times(n);
      for (int i = 0; i < n; ++i)
        times[i] = n == 1 ? 0.0 : s.duration_s * i / static_cast<double>(n - 1);
      idx = sample_frames(s.duration_s, fc.resample_rate_hz, times);
    }
    if (static_cast<int>(idx.size()) > fc.max_frames) {
      auto keep = resample_to_fixed(static_cast<int>(idx.size()), fc.max_frames);
      std::vector<int> capped;
      capped.reserve(keep.size());
      for (int k : keep) capped.push_back(idx[k]);
      idx = std::move(capped);
    }
  }
  return idx;
}

/// Runs the (frozen, synthetic or adapter-backed) encoder for one modality.
/// Deterministic in (sample_id, spec.seed).
inline ModalityEmbeddings encode_modality(const UtteranceSample& s, const EncoderSpec& spec,
                                          const FrontendConfig& fc = FrontendConfig{}) {
  ModalityEmbeddings out;
  out.modality = spec.modality;
  const int d = spec.output_dim;

  if (spec.kind == EncoderKind::external_adapter) {
    out.tokens = AdapterRegistry::instance().get(spec.adapter_id)(s, spec);
    require(out.tokens.cols() == d,
            "adapter '" + spec.adapter_id + "' returned dim " + std::to_string(out.tokens.cols()) +
                ", spec expects " + std::to_string(d));
    require(out.tokens.rows() >= 1, "adapter returned no tokens");
  } else if (spec.modality == Modality::text) {
    auto words = detail::split_words(s.text);
    Matrix base = detail::word_hash_rows(words, d, spec.seed);
    if (spec.kind == EncoderKind::synthetic_label_correlated) {
      Vector mean = detail::label_mean(s.label, Modality::text, d, spec.seed);
      out.tokens = 0.25 * base;
      out.tokens.rowwise() += mean.transpose();
    } else {
      out.tokens = base;
    }
  } else {
    auto idx = select_frames(s, spec.modality, fc);
    const int f = static_cast<int>(idx.size());
    out.tokens.resize(f, d);
    if (spec.kind == EncoderKind::synthetic_gaussian) {
      for (int i = 0; i < f; ++i) {
        auto rng = seeded_rng(spec.seed, "gauss-frame",
                              fnv1a(s.sample_id) * 31 + fnv1a(to_string(spec.modality)) + idx[i]);
        std::normal_distribution<double> dist(0.0, 1.0);
        for (int j = 0; j < d; ++j) out.tokens(i, j) = dist(rng);
      }
    } else {  // synthetic_label_correlated
      Vector mean = detail::label_mean(s.label, spec.modality, d, spec.seed);
      for (int i = 0; i < f; ++i) {
        auto rng = seeded_rng(spec.seed, "corr-frame",
                              fnv1a(s.sample_id) * 31 + fnv1a(to_string(spec.modality)) + idx[i]);
        std::normal_distribution<double> dist(0.0, 0.25);
        for (int j = 0; j < d; ++j) out.tokens(i, j) = mean(j) + dist(rng);
      }
    }
  }
  require(all_finite(out.tokens), "encoder produced non-finite values for sample '" + s.sample_id + "'");
  return out;
}

inline TextEncoding encode_text(const UtteranceSample& s, const EncoderSpec& spec) {
  require(spec.modality == Modality::text, "encode_text: spec must be a text encoder");
  TextEncoding enc;
  enc.words = detail::split_words(s.text);
  ModalityEmbeddings emb = encode_modality(s, spec);
  enc.tokens = emb.tokens;
  enc.mask.assign(static_cast<size_t>(enc.tokens.rows()), 1);
  return enc;
}

// ---------------------------------------------------------------- manifest IO

namespace detail {

inline json label_to_json(const TaskLabel& l) {
  switch (l.type) {
    case TaskLabel::Type::score: return json{{"score", l.score}};
    case TaskLabel::Type::single_class: return json{{"class", l.cls}};
    case TaskLabel::Type::class_set: return json{{"classes", std::vector<int>(l.classes.begin(), l.classes.end())}};
  }
  return {};
}

inline TaskLabel label_from_json(const json& j, const std::string& ctx) {
  if (j.contains("score")) return TaskLabel::make_score(j.at("score").get<double>());
  if (j.contains("class")) return TaskLabel::make_class(j.at("class").get<int>());
  if (j.contains("classes")) {
    auto v = j.at("classes").get<std::vector<int>>();
    return TaskLabel::make_set(std::set<int>(v.begin(), v.end()));
  }
  throw ConfigError(ctx + ": field 'label' must contain 'score', 'class' or 'classes'");
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& ctx) {
  require_config(j.is_array() && !j.empty(), ctx + ": expected a non-empty array of rows");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j.at(0).size());
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    require_config(static_cast<int>(j.at(i).size()) == cols, ctx + ": ragged feature rows");
    for (int c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

/// Features are either inline (array of rows) or a relative SMFT path.
inline Matrix features_from_json(const json& j, const std::filesystem::path& base,
                                 const std::string& ctx) {
  if (j.is_string()) return read_smft((base / j.get<std::string>()).string());
  return matrix_from_json(j, ctx);
}

}  // namespace detail

/// JSON-lines manifest: line 1 is a header object (task_kind, class_names,
/// version), each following line is one utterance record.
inline void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream os(path);
  require(os.is_open(), "cannot open '" + path + "' for writing");
  json header{{"task_kind", to_string(m.task.kind)},
              {"class_names", m.task.class_names},
              {"version", m.version}};
  os << header.dump() << "\n";
  for (const auto& r : m.records) {
    json rec{{"sample_id", r.sample_id},
             {"text", r.text},
             {"audio_frames", detail::matrix_to_json(r.audio_frames)},
             {"vision_frames", detail::matrix_to_json(r.vision_frames)},
             {"duration_s", r.duration_s},
             {"label", detail::label_to_json(r.label)},
             {"split", to_string(r.split)}};
    if (r.dialogue_id) rec["dialogue_id"] = *r.dialogue_id;
    if (r.turn_index) rec["turn_index"] = *r.turn_index;
    os << rec.dump() << "\n";
  }
  require(static_cast<bool>(os), "write failure on '" + path + "'");
}

inline DatasetManifest load_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is.is_open()) throw ConfigError("cannot open manifest '" + path + "'");
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  DatasetManifest m;
  std::string line;
  require_config(static_cast<bool>(std::getline(is, line)), "manifest '" + path + "' is empty");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw ConfigError("manifest header: " + std::string(e.what()));
  }
  m.task.kind = task_kind_from_string(header.value("task_kind", "regression"));
  if (header.contains("class_names"))
    m.task.class_names = header.at("class_names").get<std::vector<std::string>>();
  if (m.task.kind == TaskKind::detection && m.task.class_names.empty())
    m.task.class_names = {"negative", "positive"};
  m.version = header.value("version", "1");

  std::set<std::string> seen_ids;
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    UtteranceSample s;
    auto ctx_of = [&](const std::string& field) {
      std::string id = rec.value("sample_id", "<line " + std::to_string(line_no) + ">");
      return "record '" + id + "': field '" + field + "'";
    };
    try {
      require_config(rec.contains("sample_id"), ctx_of("sample_id") + " missing");
      s.sample_id = rec.at("sample_id").get<std::string>();
      require_config(seen_ids.insert(s.sample_id).second,
                     "record '" + s.sample_id + "': duplicate sample_id");
      s.text = rec.value("text", "");
      require_config(rec.contains("audio_frames"), ctx_of("audio_frames") + " missing");
      s.audio_frames = detail::features_from_json(rec.at("audio_frames"), base, ctx_of("audio_frames"));
      require_config(rec.contains("vision_frames"), ctx_of("vision_frames") + " missing");
      s.vision_frames = detail::features_from_json(rec.at("vision_frames"), base, ctx_of("vision_frames"));
      s.duration_s = rec.value("duration_s", 0.0);
      require_config(s.duration_s >= 0.0, ctx_of("duration_s") + " must be >= 0");
      require_config(rec.contains("label"), ctx_of("label") + " missing");
      s.label = detail::label_from_json(rec.at("label"), "record '" + s.sample_id + "'");
      require_config(label_conforms(s.label, m.task.kind,
                                    std::max<int>(2, static_cast<int>(m.task.class_names.size()))),
                     ctx_of("label") + " does not conform to task kind " + to_string(m.task.kind));
      require_config(rec.contains("split"), ctx_of("split") + " missing");
      s.split = split_from_string(rec.at("split").get<std::string>());
      if (rec.contains("dialogue_id")) s.dialogue_id = rec.at("dialogue_id").get<std::string>();
      if (rec.contains("turn_index")) s.turn_index = rec.at("turn_index").get<int>();
      require_config(all_finite(s.audio_frames) && all_finite(s.vision_frames),
                     "record '" + s.sample_id + "': non-finite feature values");
    } catch (const json::exception& e) {
      throw ConfigError("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    m.records.push_back(std::move(s));
  }
  return m;
}

// ------------------------------------------------------------- synthetic data

struct SynthesisConfig {
  int n_train = 140;
  int n_valid = 30;
  int n_test = 30;
  TaskKind task_kind = TaskKind::regression;
  int n_classes = 2;  // classification only
  bool multi_label = false;
  int frames_min = 3;
  int frames_max = 40;
  int words_min = 4;
  int words_max = 10;
  int raw_feature_dim = 8;
  std::uint64_t seed = 1;
};

/// Generates a deterministic desk-scale dataset. Frame features are filled
/// with seeded noise (they matter only to external adapters); the learnable
/// signal is injected by the label-correlated synthetic encoders.
inline DatasetManifest synthesize_dataset(const SynthesisConfig& cfg) {
  require_config(cfg.n_train >= 0 && cfg.n_valid >= 0 && cfg.n_test >= 0, "negative sample count");
  require_config(cfg.frames_min >= 1 && cfg.frames_max >= cfg.frames_min, "bad frame count range");
  require_config(cfg.words_min >= 1 && cfg.words_max >= cfg.words_min, "bad word count range");
  if (cfg.task_kind == TaskKind::classification)
    require_config(cfg.n_classes >= 2, "classification needs >= 2 classes");

  static const char* kVocabPos[] = {"great", "love", "wonderful", "bright", "happy", "warm"};
  static const char* kVocabNeg[] = {"awful", "hate", "boring", "dark", "sad", "cold"};
  static const char* kVocabNeu[] = {"movie", "scene", "voice", "story", "camera", "music",
                                    "the", "a", "and", "with", "very", "quite"};

  DatasetManifest m;
  m.task.kind = cfg.task_kind;
  if (cfg.task_kind == TaskKind::detection) {
    m.task.class_names = {"negative", "positive"};
  } else if (cfg.task_kind == TaskKind::classification) {
    for (int c = 0; c < cfg.n_classes; ++c) m.task.class_names.push_back("class" + std::to_string(c));
  }

  auto rng = seeded_rng(cfg.seed, "synthesize");
  std::uniform_int_distribution<int> frame_dist(cfg.frames_min, cfg.frames_max);
  std::uniform_int_distribution<int> word_dist(cfg.words_min, cfg.words_max);
  std::uniform_real_distribution<double> score_dist(-3.0, 3.0);
  std::normal_distribution<double> feat_dist(0.0, 1.0);

  int total = cfg.n_train + cfg.n_valid + cfg.n_test;
  for (int i = 0; i < total; ++i) {
    UtteranceSample s;
    s.sample_id = "synth-" + std::to_string(i);
    s.split = i < cfg.n_train ? Split::train : (i < cfg.n_train + cfg.n_valid ? Split::valid : Split::test);

    switch (cfg.task_kind) {
      case TaskKind::regression: s.label = TaskLabel::make_score(score_dist(rng)); break;
      case TaskKind::detection: s.label = TaskLabel::make_class(static_cast<int>(rng() % 2)); break;
      case TaskKind::classification:
        if (cfg.multi_label) {
          std::set<int> cs;
          cs.insert(static_cast<int>(rng() % cfg.n_classes));
          for (int c = 0; c < cfg.n_classes; ++c)
            if ((rng() % 4) == 0) cs.insert(c);
          s.label = TaskLabel::make_set(std::move(cs));
        } else {
          s.label = TaskLabel::make_class(static_cast<int>(rng() % cfg.n_classes));
        }
        break;
    }

    // Text leans on the label so text-dominant experiments are possible.
    double polarity = 0.0;
    if (s.label.type == TaskLabel::Type::score) polarity = s.label.score / 3.0;
    else if (s.label.type == TaskLabel::Type::single_class) polarity = s.label.cls % 2 ? 1.0 : -1.0;
    int n_words = word_dist(rng);
    std::string text;
    for (int w = 0; w < n_words; ++w) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const char* word;
      double roll = u(rng);
      if (roll < 0.3 + 0.4 * std::max(0.0, polarity)) word = kVocabPos[rng() % 6];
      else if (roll < 0.6 + 0.4 * std::max(0.0, -polarity)) word = kVocabNeg[rng() % 6];
      else word = kVocabNeu[rng() % 12];
      if (w) text += ' ';
      text += word;
    }
    s.text = text;

    int fa = frame_dist(rng);
    int fv = frame_dist(rng);
    s.audio_frames = Matrix::NullaryExpr(fa, cfg.raw_feature_dim, [&]() { return feat_dist(rng); });
    s.vision_frames = Matrix::NullaryExpr(fv, cfg.raw_feature_dim, [&]() { return feat_dist(rng); });
    // Durations sit exactly on the 2 fps grid so re-sampling is the identity.
    s.duration_s = (std::max(fa, fv) - 1) / 2.0;
    m.records.push_back(std::move(s));
  }
  return m;
}

}  // namespace smac

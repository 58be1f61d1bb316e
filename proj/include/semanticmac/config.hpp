#pragma once

#include <nlohmann/json.hpp>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "semanticmac/labels.hpp"
#include "semanticmac/util.hpp"

namespace smac {

using json = nlohmann::json;

enum class EncoderKind { synthetic_gaussian, synthetic_label_correlated, external_adapter };

inline std::string to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::synthetic_gaussian: return "synthetic_gaussian";
    case EncoderKind::synthetic_label_correlated: return "synthetic_label_correlated";
    case EncoderKind::external_adapter: return "external_adapter";
  }
  return "?";
}

inline EncoderKind encoder_kind_from_string(const std::string& s) {
  if (s == "synthetic_gaussian") return EncoderKind::synthetic_gaussian;
  if (s == "synthetic_label_correlated") return EncoderKind::synthetic_label_correlated;
  if (s == "external_adapter") return EncoderKind::external_adapter;
  throw ConfigError("unknown encoder kind '" + s + "'");
}

struct EncoderSpec {
  Modality modality = Modality::text;
  int output_dim = 16;
  EncoderKind kind = EncoderKind::synthetic_gaussian;
  bool frozen = true;
  std::uint64_t seed = 0;
  std::string adapter_id;  // only for external_adapter

  void validate() const {
    require_config(output_dim >= 1, "encoder output_dim must be >= 1");
    if (modality != Modality::text)
      require_config(frozen, "audio/vision encoders are frozen; got frozen=false for " + to_string(modality));
    if (kind == EncoderKind::external_adapter)
      require_config(!adapter_id.empty(), "external_adapter encoder needs an adapter_id");
  }
};

struct FrontendConfig {
  double resample_rate_hz = 2.0;  // 0 disables grid re-sampling
  int max_frames = 256;
  int fixed_frames = 0;  // >0 forces every clip to exactly this many frames

  void validate() const {
    require_config(resample_rate_hz >= 0.0, "resample_rate_hz must be >= 0");
    require_config(max_frames >= 1, "max_frames must be >= 1");
    require_config(fixed_frames >= 0, "fixed_frames must be >= 0");
  }
};

struct PerceiverConfig {
  int n_tokens = 8;
  int depth = 2;
  int heads = 4;
  int ffn_multiplier = 4;
  // ablation switches
  bool use_frame_embeddings = true;
  bool use_layer_norm = true;
  bool use_residual = true;
  bool share_frame_embeddings = false;  // audio/vision share one table

  void validate(int d_a, int d_v) const {
    require_config(n_tokens >= 1, "perceiver n_tokens must be >= 1");
    require_config(depth >= 0, "perceiver depth must be >= 0");
    require_config(heads >= 1 && d_a % heads == 0 && d_v % heads == 0,
                   "modality dims must be divisible by perceiver head count");
    require_config(ffn_multiplier >= 1, "ffn_multiplier must be >= 1");
    if (share_frame_embeddings)
      require_config(d_a == d_v, "shared frame embeddings require d_audio == d_vision");
  }
};

enum class GateKind { relu, none };

struct GBAConfig {
  int common_dim = 64;  // d_c
  int heads = 4;
  int bridge_tokens = 4;  // m
  int depth = 1;          // stacked layers per pathway
  int ffn_multiplier = 4;
  GateKind gate = GateKind::relu;
  // ablation / variant switches
  bool use_modality_embeddings = true;
  bool multi_query = true;
  bool use_bridge_tokens = true;
  bool two_stage_softmax = false;
  bool layer_norm = false;
  bool share_pathway_params = false;

  int head_dim() const { return common_dim / heads; }

  void validate(int n_tokens) const {
    require_config(common_dim >= 1 && heads >= 1 && common_dim % heads == 0,
                   "common_dim must be divisible by gba head count");
    require_config(bridge_tokens >= 1, "bridge_tokens must be >= 1");
    require_config(bridge_tokens < n_tokens,
                   "bridge_tokens m must be < perceiver n_tokens (bridge must bottleneck)");
    require_config(depth >= 0, "gba depth must be >= 0");
  }
};

struct SCLGConfig {
  int neighbors = 3;    // K
  double kernel_scale = 1.0;  // omega
  int start_epoch = 1;  // r
  bool momentum = true;           // off: p += delta without the 1/z damping
  bool use_pseudo_labels = true;  // off: sub-task targets stay at ground truth
  bool pooled_shared_feature = true;  // S feature: mean of the three d_c segments (else raw 3*d_c)

  void validate() const {
    require_config(neighbors >= 1, "sclg neighbors must be >= 1");
    require_config(kernel_scale > 0.0, "sclg kernel_scale must be > 0");
    require_config(start_epoch >= 1, "sclg start_epoch must be >= 1");
  }
};

struct ContrastiveConfig {
  double tau = 1.0;      // intra temperature
  double upsilon = 1.0;  // inter temperature
  double alpha = 0.1;
  double beta = 0.1;
  double sentiment_threshold = 0.0;
  bool include_self_in_denominator = false;
  bool use_intra = true;
  bool use_inter = true;

  void validate() const {
    require_config(tau > 0.0 && upsilon > 0.0, "contrastive temperatures must be > 0");
    require_config(alpha >= 0.0 && beta >= 0.0, "contrastive weights must be >= 0");
  }
};

enum class SchedulerKind { constant, cosine };

struct TaskSpec {
  TaskKind kind = TaskKind::regression;
  std::vector<std::string> class_names;  // classification/detection

  int n_classes() const {
    if (kind == TaskKind::regression) return 0;
    if (kind == TaskKind::detection) return 2;
    return static_cast<int>(class_names.size());
  }
  void validate() const {
    if (kind == TaskKind::classification)
      require_config(class_names.size() >= 2, "classification task needs >= 2 class names");
    if (kind == TaskKind::detection && class_names.empty()) {
      // default detection class names filled in by the loader
    }
  }
};

struct TrainConfig {
  TaskSpec task;
  int epochs = 50;
  int batch_size = 32;
  double lr_language = 1e-3;
  double lr_other = 1e-3;
  double weight_decay = 1e-4;
  SchedulerKind scheduler = SchedulerKind::constant;
  int warmup_epochs = 1;
  double dropout = 0.0;
  double grad_clip_norm = 0.0;  // 0 disables clipping
  std::uint64_t seed = 42;
  bool multitask = true;  // off: optimize L_CL + the fused task loss only
  bool dump_pseudo_labels = false;

  EncoderSpec text_encoder{Modality::text, 16, EncoderKind::synthetic_gaussian, false, 0, ""};
  EncoderSpec audio_encoder{Modality::audio, 16, EncoderKind::synthetic_gaussian, true, 0, ""};
  EncoderSpec vision_encoder{Modality::vision, 16, EncoderKind::synthetic_gaussian, true, 0, ""};
  FrontendConfig frontend;
  PerceiverConfig perceiver;
  GBAConfig gba;
  SCLGConfig sclg;
  ContrastiveConfig contrastive;
  double head_hidden_ratio = 0.5;

  void validate() const {
    task.validate();
    require_config(epochs >= 0, "epochs must be >= 0");
    require_config(batch_size >= 2, "batch_size must be >= 2");
    require_config(lr_language > 0 && lr_other > 0, "learning rates must be > 0");
    require_config(weight_decay >= 0, "weight_decay must be >= 0");
    require_config(warmup_epochs >= 0, "warmup_epochs must be >= 0");
    require_config(dropout >= 0 && dropout < 1, "dropout must be in [0,1)");
    require_config(head_hidden_ratio > 0, "head_hidden_ratio must be > 0");
    text_encoder.validate();
    audio_encoder.validate();
    vision_encoder.validate();
    frontend.validate();
    perceiver.validate(audio_encoder.output_dim, vision_encoder.output_dim);
    gba.validate(perceiver.n_tokens);
    sclg.validate();
    contrastive.validate();
    require_config(sclg.neighbors < batch_size, "sclg neighbors K must be < batch_size");
  }
};

// ------------------------------------------------------------- JSON bindings

inline void to_json(json& j, const EncoderSpec& e) {
  j = json{{"modality", to_string(e.modality)}, {"output_dim", e.output_dim},
           {"kind", to_string(e.kind)},         {"frozen", e.frozen},
           {"seed", e.seed},                    {"adapter_id", e.adapter_id}};
}
inline void from_json(const json& j, EncoderSpec& e) {
  if (j.contains("modality")) e.modality = modality_from_string(j.at("modality").get<std::string>());
  if (j.contains("output_dim")) e.output_dim = j.at("output_dim").get<int>();
  if (j.contains("kind")) e.kind = encoder_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("frozen")) e.frozen = j.at("frozen").get<bool>();
  if (j.contains("seed")) e.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("adapter_id")) e.adapter_id = j.at("adapter_id").get<std::string>();
}

inline void to_json(json& j, const FrontendConfig& f) {
  j = json{{"resample_rate_hz", f.resample_rate_hz},
           {"max_frames", f.max_frames},
           {"fixed_frames", f.fixed_frames}};
}
inline void from_json(const json& j, FrontendConfig& f) {
  if (j.contains("resample_rate_hz")) f.resample_rate_hz = j.at("resample_rate_hz").get<double>();
  if (j.contains("max_frames")) f.max_frames = j.at("max_frames").get<int>();
  if (j.contains("fixed_frames")) f.fixed_frames = j.at("fixed_frames").get<int>();
}

inline void to_json(json& j, const PerceiverConfig& p) {
  j = json{{"n_tokens", p.n_tokens},
           {"depth", p.depth},
           {"heads", p.heads},
           {"ffn_multiplier", p.ffn_multiplier},
           {"use_frame_embeddings", p.use_frame_embeddings},
           {"use_layer_norm", p.use_layer_norm},
           {"use_residual", p.use_residual},
           {"share_frame_embeddings", p.share_frame_embeddings}};
}
inline void from_json(const json& j, PerceiverConfig& p) {
  if (j.contains("n_tokens")) p.n_tokens = j.at("n_tokens").get<int>();
  if (j.contains("depth")) p.depth = j.at("depth").get<int>();
  if (j.contains("heads")) p.heads = j.at("heads").get<int>();
  if (j.contains("ffn_multiplier")) p.ffn_multiplier = j.at("ffn_multiplier").get<int>();
  if (j.contains("use_frame_embeddings")) p.use_frame_embeddings = j.at("use_frame_embeddings").get<bool>();
  if (j.contains("use_layer_norm")) p.use_layer_norm = j.at("use_layer_norm").get<bool>();
  if (j.contains("use_residual")) p.use_residual = j.at("use_residual").get<bool>();
  if (j.contains("share_frame_embeddings")) p.share_frame_embeddings = j.at("share_frame_embeddings").get<bool>();
}

inline void to_json(json& j, const GBAConfig& g) {
  j = json{{"common_dim", g.common_dim},
           {"heads", g.heads},
           {"bridge_tokens", g.bridge_tokens},
           {"depth", g.depth},
           {"ffn_multiplier", g.ffn_multiplier},
           {"gate", g.gate == GateKind::relu ? "relu" : "none"},
           {"use_modality_embeddings", g.use_modality_embeddings},
           {"multi_query", g.multi_query},
           {"use_bridge_tokens", g.use_bridge_tokens},
           {"two_stage_softmax", g.two_stage_softmax},
           {"layer_norm", g.layer_norm},
           {"share_pathway_params", g.share_pathway_params}};
}
inline void from_json(const json& j, GBAConfig& g) {
  if (j.contains("common_dim")) g.common_dim = j.at("common_dim").get<int>();
  if (j.contains("heads")) g.heads = j.at("heads").get<int>();
  if (j.contains("bridge_tokens")) g.bridge_tokens = j.at("bridge_tokens").get<int>();
  if (j.contains("depth")) g.depth = j.at("depth").get<int>();
  if (j.contains("ffn_multiplier")) g.ffn_multiplier = j.at("ffn_multiplier").get<int>();
  if (j.contains("gate")) {
    auto s = j.at("gate").get<std::string>();
    if (s == "relu") g.gate = GateKind::relu;
    else if (s == "none") g.gate = GateKind::none;
    else throw ConfigError("unknown gate kind '" + s + "'");
  }
  if (j.contains("use_modality_embeddings")) g.use_modality_embeddings = j.at("use_modality_embeddings").get<bool>();
  if (j.contains("multi_query")) g.multi_query = j.at("multi_query").get<bool>();
  if (j.contains("use_bridge_tokens")) g.use_bridge_tokens = j.at("use_bridge_tokens").get<bool>();
  if (j.contains("two_stage_softmax")) g.two_stage_softmax = j.at("two_stage_softmax").get<bool>();
  if (j.contains("layer_norm")) g.layer_norm = j.at("layer_norm").get<bool>();
  if (j.contains("share_pathway_params")) g.share_pathway_params = j.at("share_pathway_params").get<bool>();
}

inline void to_json(json& j, const SCLGConfig& s) {
  j = json{{"neighbors", s.neighbors},
           {"kernel_scale", s.kernel_scale},
           {"start_epoch", s.start_epoch},
           {"momentum", s.momentum},
           {"use_pseudo_labels", s.use_pseudo_labels},
           {"pooled_shared_feature", s.pooled_shared_feature}};
}
inline void from_json(const json& j, SCLGConfig& s) {
  if (j.contains("neighbors")) s.neighbors = j.at("neighbors").get<int>();
  if (j.contains("kernel_scale")) s.kernel_scale = j.at("kernel_scale").get<double>();
  if (j.contains("start_epoch")) s.start_epoch = j.at("start_epoch").get<int>();
  if (j.contains("momentum")) s.momentum = j.at("momentum").get<bool>();
  if (j.contains("use_pseudo_labels")) s.use_pseudo_labels = j.at("use_pseudo_labels").get<bool>();
  if (j.contains("pooled_shared_feature")) s.pooled_shared_feature = j.at("pooled_shared_feature").get<bool>();
}

inline void to_json(json& j, const ContrastiveConfig& c) {
  j = json{{"tau", c.tau},
           {"upsilon", c.upsilon},
           {"alpha", c.alpha},
           {"beta", c.beta},
           {"sentiment_threshold", c.sentiment_threshold},
           {"include_self_in_denominator", c.include_self_in_denominator},
           {"use_intra", c.use_intra},
           {"use_inter", c.use_inter}};
}
inline void from_json(const json& j, ContrastiveConfig& c) {
  if (j.contains("tau")) c.tau = j.at("tau").get<double>();
  if (j.contains("upsilon")) c.upsilon = j.at("upsilon").get<double>();
  if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
  if (j.contains("beta")) c.beta = j.at("beta").get<double>();
  if (j.contains("sentiment_threshold")) c.sentiment_threshold = j.at("sentiment_threshold").get<double>();
  if (j.contains("include_self_in_denominator"))
    c.include_self_in_denominator = j.at("include_self_in_denominator").get<bool>();
  if (j.contains("use_intra")) c.use_intra = j.at("use_intra").get<bool>();
  if (j.contains("use_inter")) c.use_inter = j.at("use_inter").get<bool>();
}

inline void to_json(json& j, const TaskSpec& t) {
  j = json{{"kind", to_string(t.kind)}, {"class_names", t.class_names}};
}
inline void from_json(const json& j, TaskSpec& t) {
  if (j.contains("kind")) t.kind = task_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("class_names")) t.class_names = j.at("class_names").get<std::vector<std::string>>();
  if (t.kind == TaskKind::detection && t.class_names.empty()) t.class_names = {"negative", "positive"};
}

inline void to_json(json& j, const TrainConfig& c) {
  j = json{{"task", c.task},
           {"epochs", c.epochs},
           {"batch_size", c.batch_size},
           {"lr_language", c.lr_language},
           {"lr_other", c.lr_other},
           {"weight_decay", c.weight_decay},
           {"scheduler", c.scheduler == SchedulerKind::cosine ? "cosine" : "constant"},
           {"warmup_epochs", c.warmup_epochs},
           {"dropout", c.dropout},
           {"grad_clip_norm", c.grad_clip_norm},
           {"seed", c.seed},
           {"multitask", c.multitask},
           {"dump_pseudo_labels", c.dump_pseudo_labels},
           {"text_encoder", c.text_encoder},
           {"audio_encoder", c.audio_encoder},
           {"vision_encoder", c.vision_encoder},
           {"frontend", c.frontend},
           {"perceiver", c.perceiver},
           {"gba", c.gba},
           {"sclg", c.sclg},
           {"contrastive", c.contrastive},
           {"head_hidden_ratio", c.head_hidden_ratio}};
}
inline void from_json(const json& j, TrainConfig& c) {
  if (j.contains("task")) c.task = j.at("task").get<TaskSpec>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("lr_language")) c.lr_language = j.at("lr_language").get<double>();
  if (j.contains("lr_other")) c.lr_other = j.at("lr_other").get<double>();
  if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
  if (j.contains("scheduler")) {
    auto s = j.at("scheduler").get<std::string>();
    if (s == "constant") c.scheduler = SchedulerKind::constant;
    else if (s == "cosine") c.scheduler = SchedulerKind::cosine;
    else throw ConfigError("unknown scheduler '" + s + "'");
  }
  if (j.contains("warmup_epochs")) c.warmup_epochs = j.at("warmup_epochs").get<int>();
  if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
  if (j.contains("grad_clip_norm")) c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("multitask")) c.multitask = j.at("multitask").get<bool>();
  if (j.contains("dump_pseudo_labels")) c.dump_pseudo_labels = j.at("dump_pseudo_labels").get<bool>();
  if (j.contains("text_encoder")) c.text_encoder = j.at("text_encoder").get<EncoderSpec>();
  if (j.contains("audio_encoder")) c.audio_encoder = j.at("audio_encoder").get<EncoderSpec>();
  if (j.contains("vision_encoder")) c.vision_encoder = j.at("vision_encoder").get<EncoderSpec>();
  if (j.contains("frontend")) c.frontend = j.at("frontend").get<FrontendConfig>();
  if (j.contains("perceiver")) c.perceiver = j.at("perceiver").get<PerceiverConfig>();
  if (j.contains("gba")) c.gba = j.at("gba").get<GBAConfig>();
  if (j.contains("sclg")) c.sclg = j.at("sclg").get<SCLGConfig>();
  if (j.contains("contrastive")) c.contrastive = j.at("contrastive").get<ContrastiveConfig>();
  if (j.contains("head_hidden_ratio")) c.head_hidden_ratio = j.at("head_hidden_ratio").get<double>();
  c.text_encoder.modality = Modality::text;
  c.audio_encoder.modality = Modality::audio;
  c.vision_encoder.modality = Modality::vision;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream is(path);
  if (!is.is_open()) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  TrainConfig c;
  try {
    c = j.get<TrainConfig>();
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  c.validate();
  return c;
}

}  // namespace smac

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "semanticmac/util.hpp"

namespace smac {

enum class TaskKind { regression, classification, detection };

inline std::string to_string(TaskKind k) {
  switch (k) {
    case TaskKind::regression: return "regression";
    case TaskKind::classification: return "classification";
    case TaskKind::detection: return "detection";
  }
  return "?";
}

inline TaskKind task_kind_from_string(const std::string& s) {
  if (s == "regression") return TaskKind::regression;
  if (s == "classification") return TaskKind::classification;
  if (s == "detection") return TaskKind::detection;
  throw ConfigError("unknown task kind '" + s + "'");
}

/// Polymorphic label shared by ground truth and pseudo labels: a continuous
/// score, a single class index, or a multi-label class set.
struct TaskLabel {
  enum class Type { score, single_class, class_set };
  Type type = Type::score;
  double score = 0.0;
  int cls = -1;
  std::set<int> classes;  // ordered for deterministic iteration

  static TaskLabel make_score(double s) {
    TaskLabel l;
    l.type = Type::score;
    l.score = s;
    return l;
  }
  static TaskLabel make_class(int c) {
    TaskLabel l;
    l.type = Type::single_class;
    l.cls = c;
    return l;
  }
  static TaskLabel make_set(std::set<int> cs) {
    TaskLabel l;
    l.type = Type::class_set;
    l.classes = std::move(cs);
    return l;
  }

  bool operator==(const TaskLabel& o) const {
    if (type != o.type) return false;
    switch (type) {
      case Type::score: return score == o.score;
      case Type::single_class: return cls == o.cls;
      case Type::class_set: return classes == o.classes;
    }
    return false;
  }
};

/// Output dimension r of the predictor heads for a task.
inline int output_dim(TaskKind kind, int n_classes) {
  switch (kind) {
    case TaskKind::regression: return 1;
    case TaskKind::classification:
      require_config(n_classes >= 2, "classification requires >= 2 classes");
      return n_classes;
    case TaskKind::detection: return 2;
  }
  return 1;
}

/// Numeric encoding used by label generation and as soft targets:
/// regression -> [score]; single class -> one-hot; class set -> multi-hot.
inline Vector encode_label(const TaskLabel& l, TaskKind kind, int n_classes) {
  int r = output_dim(kind, kind == TaskKind::detection ? 2 : n_classes);
  Vector v = Vector::Zero(r);
  switch (l.type) {
    case TaskLabel::Type::score:
      require(kind == TaskKind::regression, "score label under non-regression task");
      v(0) = l.score;
      break;
    case TaskLabel::Type::single_class:
      require(kind != TaskKind::regression, "class label under regression task");
      require(l.cls >= 0 && l.cls < r, "class index out of range");
      v(l.cls) = 1.0;
      break;
    case TaskLabel::Type::class_set:
      require(kind == TaskKind::classification, "class-set label requires classification task");
      require(!l.classes.empty(), "empty class set");
      for (int c : l.classes) {
        require(c >= 0 && c < r, "class index out of range");
        v(c) = 1.0;
      }
      break;
  }
  return v;
}

/// Checks that a label's shape conforms to the active task kind.
inline bool label_conforms(const TaskLabel& l, TaskKind kind, int n_classes) {
  switch (kind) {
    case TaskKind::regression: return l.type == TaskLabel::Type::score;
    case TaskKind::detection:
      return l.type == TaskLabel::Type::single_class && l.cls >= 0 && l.cls < 2;
    case TaskKind::classification:
      if (l.type == TaskLabel::Type::single_class) return l.cls >= 0 && l.cls < n_classes;
      if (l.type == TaskLabel::Type::class_set) {
        if (l.classes.empty()) return false;
        return std::all_of(l.classes.begin(), l.classes.end(),
                           [&](int c) { return c >= 0 && c < n_classes; });
      }
      return false;
  }
  return false;
}

enum class Split { train, valid, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "?";
}

inline Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "valid") return Split::valid;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "'");
}

enum class Modality { text, audio, vision };

inline std::string to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::audio: return "audio";
    case Modality::vision: return "vision";
  }
  return "?";
}

inline Modality modality_from_string(const std::string& s) {
  if (s == "text") return Modality::text;
  if (s == "audio") return Modality::audio;
  if (s == "vision") return Modality::vision;
  throw ConfigError("unknown modality '" + s + "'");
}

/// The five training sub-tasks: fused multimodal (M), shared-semantic (S)
/// and the per-modality specific-semantic tasks (T, A, V).
enum class Subtask { M, S, T, A, V };

inline std::string to_string(Subtask s) {
  switch (s) {
    case Subtask::M: return "M";
    case Subtask::S: return "S";
    case Subtask::T: return "T";
    case Subtask::A: return "A";
    case Subtask::V: return "V";
  }
  return "?";
}

inline const std::vector<Subtask>& all_subtasks() {
  static const std::vector<Subtask> v{Subtask::M, Subtask::S, Subtask::T, Subtask::A, Subtask::V};
  return v;
}

inline const std::vector<Subtask>& pseudo_subtasks() {
  static const std::vector<Subtask> v{Subtask::S, Subtask::T, Subtask::A, Subtask::V};
  return v;
}

}  // namespace smac

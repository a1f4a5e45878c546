#include "flsched/config.hpp"

#include <fstream>

#include "flsched/error.hpp"

namespace flsched {

using nlohmann::json;

namespace {

std::string arch_name(Architecture::Kind kind) {
  return kind == Architecture::Kind::kSoftmax ? "softmax" : "mlp";
}

json policy_list(const std::vector<Policy>& policies) {
  json out = json::array();
  for (const auto& p : policies) out.push_back(to_string(p.kind));
  return out;
}

void merge_checked(json& target, const json& source, const std::string& prefix) {
  if (!source.is_object()) throw ConfigError("config: '" + prefix + "' must be an object");
  for (auto it = source.begin(); it != source.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!target.contains(it.key())) throw ConfigError("config: unknown key '" + key + "'");
    json& slot = target[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

template <typename T>
T field(const json& doc, const std::string& path) {
  const json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("config: missing key '" + path + "'");
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (node->is_number_integer() && node->get<std::int64_t>() < 0) {
        throw ConfigError("config: '" + path + "' must be a non-negative integer");
      }
      if (!node->is_number_integer()) {
        throw ConfigError("config: '" + path + "' must be a non-negative integer");
      }
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!node->is_number()) throw ConfigError("config: '" + path + "' must be a number");
    }
    return node->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path + "' has the wrong type (" + e.what() + ")");
  }
}

template <typename Fn>
auto parse_text(const json& doc, const std::string& path, Fn&& parse) {
  const auto text = field<std::string>(doc, path);
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace

json default_config_json() { return to_json(ExperimentConfig{}); }

json to_json(const ExperimentConfig& cfg) {
  const RunConfig& r = cfg.run;
  json seeds = json::array();
  for (auto s : cfg.sweep.seeds) seeds.push_back(s);
  return json{
      {"clients", r.clients},
      {"rounds", r.rounds},
      {"master_seed", r.master_seed},
      {"policy", to_string(r.policy.kind)},
      {"aou_threshold", r.policy.threshold.to_string()},
      {"growth", r.growth.to_string()},
      {"gamma", r.gamma},
      {"per_client_dump", r.per_client_dump},
      {"channel",
       {{"p", r.channel.p},
        {"n_subchannels", r.channel.n_subchannels},
        {"tx_power", r.channel.tx_power},
        {"rayleigh_scale", r.channel.rayleigh_scale},
        {"snr_threshold", r.channel.snr_threshold}}},
      {"learner",
       {{"arch", arch_name(r.learner.arch)},
        {"hidden", r.learner.hidden},
        {"epochs", r.learner.epochs},
        {"batch_size", r.learner.batch_size},
        {"learning_rate", r.learner.learning_rate}}},
      {"dataset",
       {{"kind", r.dataset.kind == DatasetSpec::Kind::kSynthetic ? "synthetic" : "idx"},
        {"classes", r.dataset.synthetic.classes},
        {"dim", r.dataset.synthetic.dim},
        {"n", r.dataset.synthetic.n},
        {"separation", r.dataset.synthetic.separation},
        {"test_fraction", r.dataset.test_fraction},
        {"train_images", r.dataset.train_images},
        {"train_labels", r.dataset.train_labels},
        {"test_images", r.dataset.test_images},
        {"test_labels", r.dataset.test_labels}}},
      {"partition",
       {{"kind", r.partition.kind == PartitionSpec::Kind::kIid ? "iid" : "shards"},
        {"shards", r.partition.shards},
        {"per_client", r.partition.per_client}}},
      {"sweep", {{"policies", policy_list(cfg.sweep.policies)}, {"seeds", seeds}}},
  };
}

json resolve_with_defaults(const json& doc) {
  json resolved = default_config_json();
  merge_checked(resolved, doc, "");
  return resolved;
}

ExperimentConfig experiment_from_json(const json& input) {
  const json doc = resolve_with_defaults(input);
  ExperimentConfig cfg;
  RunConfig& r = cfg.run;
  r.clients = field<std::size_t>(doc, "clients");
  r.rounds = field<std::size_t>(doc, "rounds");
  r.master_seed = field<std::uint64_t>(doc, "master_seed");
  r.policy.kind = parse_text(doc, "policy", parse_policy_kind);
  r.policy.threshold = parse_text(doc, "aou_threshold", ThresholdRule::parse);
  r.growth = parse_text(doc, "growth", Growth::parse);
  r.gamma = field<double>(doc, "gamma");
  r.per_client_dump = field<bool>(doc, "per_client_dump");

  r.channel.p = field<double>(doc, "channel.p");
  r.channel.n_subchannels = field<std::size_t>(doc, "channel.n_subchannels");
  r.channel.tx_power = field<double>(doc, "channel.tx_power");
  r.channel.rayleigh_scale = field<double>(doc, "channel.rayleigh_scale");
  r.channel.snr_threshold = field<double>(doc, "channel.snr_threshold");

  r.learner.arch = parse_text(doc, "learner.arch", [](const std::string& s) {
    if (s == "mlp") return Architecture::Kind::kMlp;
    if (s == "softmax") return Architecture::Kind::kSoftmax;
    throw std::invalid_argument("learner.arch: expected mlp or softmax, got '" + s + "'");
  });
  r.learner.hidden = field<std::size_t>(doc, "learner.hidden");
  r.learner.epochs = field<std::size_t>(doc, "learner.epochs");
  r.learner.batch_size = field<std::size_t>(doc, "learner.batch_size");
  r.learner.learning_rate = field<double>(doc, "learner.learning_rate");

  r.dataset.kind = parse_text(doc, "dataset.kind", [](const std::string& s) {
    if (s == "synthetic") return DatasetSpec::Kind::kSynthetic;
    if (s == "idx") return DatasetSpec::Kind::kIdx;
    throw std::invalid_argument("dataset.kind: expected synthetic or idx, got '" + s + "'");
  });
  r.dataset.synthetic.classes = field<std::size_t>(doc, "dataset.classes");
  r.dataset.synthetic.dim = field<std::size_t>(doc, "dataset.dim");
  r.dataset.synthetic.n = field<std::size_t>(doc, "dataset.n");
  r.dataset.synthetic.separation = field<double>(doc, "dataset.separation");
  r.dataset.test_fraction = field<double>(doc, "dataset.test_fraction");
  r.dataset.train_images = field<std::string>(doc, "dataset.train_images");
  r.dataset.train_labels = field<std::string>(doc, "dataset.train_labels");
  r.dataset.test_images = field<std::string>(doc, "dataset.test_images");
  r.dataset.test_labels = field<std::string>(doc, "dataset.test_labels");

  r.partition.kind = parse_text(doc, "partition.kind", [](const std::string& s) {
    if (s == "iid") return PartitionSpec::Kind::kIid;
    if (s == "shards") return PartitionSpec::Kind::kShards;
    throw std::invalid_argument("partition.kind: expected iid or shards, got '" + s + "'");
  });
  r.partition.shards = field<std::size_t>(doc, "partition.shards");
  r.partition.per_client = field<std::size_t>(doc, "partition.per_client");

  const json& policies = doc["sweep"]["policies"];
  const json& seeds = doc["sweep"]["seeds"];
  if (!policies.is_array() || !seeds.is_array()) {
    throw ConfigError("config: 'sweep.policies' and 'sweep.seeds' must be arrays");
  }
  for (const auto& p : policies) {
    if (!p.is_string()) throw ConfigError("config: 'sweep.policies' entries must be strings");
    try {
      cfg.sweep.policies.push_back({parse_policy_kind(p.get<std::string>()), r.policy.threshold});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: sweep.") + e.what());
    }
  }
  for (const auto& s : seeds) {
    if (!s.is_number_unsigned()) {
      throw ConfigError("config: 'sweep.seeds' entries must be non-negative integers");
    }
    cfg.sweep.seeds.push_back(s.get<std::uint64_t>());
  }
  return cfg;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = text;

  const json schema = default_config_json();
  const json* probe = &schema;
  json* slot = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!probe->is_object() || !probe->contains(part)) {
      throw ConfigError("override: unknown key '" + key + "'");
    }
    probe = &(*probe)[part];
    if (!slot->is_object()) *slot = json::object();
    slot = &(*slot)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (probe->is_object()) throw ConfigError("override: '" + key + "' names a section, not a value");
  *slot = std::move(value);
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " does not parse: " + e.what());
  }
}

}  // namespace flsched

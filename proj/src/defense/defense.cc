/*
 * Copyright 2026 The fssl-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fssl/defense/defense.h"

#include <algorithm>
#include <cstdlib>
#include <stdexcept>

#include "fssl/core/error.h"
#include "fssl/core/rng.h"
#include "fssl/defense/eminspector.h"
#include "fssl/defense/flare.h"
#include "fssl/defense/robust.h"

namespace fssl::defense {

using core::ParameterVector;
using protocol::UploadedModel;

namespace {

const std::pair<DefenseKind, const char*> kNames[] = {
    {DefenseKind::kFedAvg, "fedavg"},       {DefenseKind::kEmInspector, "eminspector"},
    {DefenseKind::kKrum, "krum"},           {DefenseKind::kTrimmedMean, "trimmed_mean"},
    {DefenseKind::kFlTrust, "fltrust"},     {DefenseKind::kFoolsGold, "foolsgold"},
    {DefenseKind::kFlame, "flame"},         {DefenseKind::kRflbat, "rflbat"},
    {DefenseKind::kFlare, "flare"},
};

}  // namespace

std::string to_string(DefenseKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

DefenseKind parse_defense_kind(const std::string& name) {
  for (const auto& [k, n] : kNames) {
    if (name == n) return k;
  }
  throw ConfigError("unknown defense kind '" + name + "'");
}

const std::vector<DefenseKind>& all_defense_kinds() {
  static const std::vector<DefenseKind> kinds = [] {
    std::vector<DefenseKind> v;
    for (const auto& [k, name] : kNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

std::string to_string(BoundaryRule rule) {
  return rule == BoundaryRule::kMean ? "mean" : "max_mean_median";
}

BoundaryRule parse_boundary_rule(const std::string& name) {
  if (name == "max_mean_median") return BoundaryRule::kMaxMeanMedian;
  if (name == "mean") return BoundaryRule::kMean;
  throw ConfigError("unknown boundary rule '" + name + "'");
}

void DefenseConfig::validate() const {
  if (inspection_size == 0) throw ConfigError("defense.inspection_size must be >= 1");
  if (estimated_malicious_fraction) {
    const double q = *estimated_malicious_fraction + fluctuation;
    if (*estimated_malicious_fraction < 0.0 || fluctuation < 0.0 || !(q > 0.0 && q < 0.5)) {
      throw ConfigError(
          "defense.estimated_malicious_fraction + fluctuation must lie in (0, 0.5)");
    }
  }
  if (kind == DefenseKind::kFlTrust && root_size < 2) {
    throw ConfigError("defense.root_size must be >= 2");
  }
  if (flame_noise < 0.0) throw ConfigError("defense.flame_noise must be >= 0");
}

std::set<std::size_t> MaliciousScoreTable::flagged() const {
  std::set<std::size_t> out;
  for (const auto& [id, s] : scores) {
    if (s > 0) out.insert(id);
  }
  return out;
}

bool MaliciousScoreTable::consistent() const {
  const long n = static_cast<long>(items());
  for (const auto& [id, s] : scores) {
    if (std::labs(s) > n || (std::labs(s) % 2) != (n % 2)) return false;
  }
  return true;
}

std::vector<UploadedModel> sorted_by_client(std::span<const UploadedModel> updates) {
  std::vector<UploadedModel> out(updates.begin(), updates.end());
  std::sort(out.begin(), out.end(),
            [](const UploadedModel& a, const UploadedModel& b) { return a.client_id < b.client_id; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].client_id == out[i - 1].client_id) {
      throw std::invalid_argument("duplicate client id " + std::to_string(out[i].client_id));
    }
  }
  return out;
}

std::vector<ParameterVector> deltas(std::span<const UploadedModel> updates,
                                    const ParameterVector& global) {
  std::vector<ParameterVector> out;
  out.reserve(updates.size());
  for (const auto& u : updates) out.push_back(subtract(u.params, global));
  return out;
}

namespace {

std::set<std::size_t> complement(std::span<const UploadedModel> updates,
                                 const std::vector<std::size_t>& kept) {
  std::set<std::size_t> out;
  for (const auto& u : updates) {
    if (std::find(kept.begin(), kept.end(), u.client_id) == kept.end()) out.insert(u.client_id);
  }
  return out;
}

DefenseOutcome from_selection(std::span<const UploadedModel> updates, Selection s) {
  DefenseOutcome out;
  out.flagged = complement(updates, s.kept);
  out.aggregated = std::move(s.aggregated);
  out.kept_previous = s.kept_previous;
  out.note = std::move(s.note);
  return out;
}

class FedAvgDefense final : public Defense {
 public:
  DefenseKind kind() const override { return DefenseKind::kFedAvg; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates, const RoundContext&) override {
    DefenseOutcome out;
    out.aggregated = protocol::fedavg(sorted_by_client(updates));
    return out;
  }
};

class EmInspectorDefense final : public Defense {
 public:
  EmInspectorDefense(DefenseConfig cfg, data::InspectionSet inspection)
      : cfg_(std::move(cfg)), inspection_(std::move(inspection)) {}
  DefenseKind kind() const override { return DefenseKind::kEmInspector; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    if (updates.size() < 2) {
      DefenseOutcome out;
      out.aggregated = protocol::fedavg(updates);
      out.note = "fewer than two uploads; inspection skipped";
      return out;
    }
    ScoringOptions options{cfg_.boundary, std::nullopt};
    if (cfg_.estimated_malicious_fraction) {
      options.top_fraction = *cfg_.estimated_malicious_fraction + cfg_.fluctuation;
    }
    return eminspector(*ctx.spec, updates, inspection_, *ctx.global, options);
  }

 private:
  DefenseConfig cfg_;
  data::InspectionSet inspection_;
};

class KrumDefense final : public Defense {
 public:
  explicit KrumDefense(std::size_t c) : c_(c) {}
  DefenseKind kind() const override { return DefenseKind::kKrum; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates, const RoundContext&) override {
    return from_selection(updates, krum(updates, c_));
  }

 private:
  std::size_t c_;
};

class TrimmedMeanDefense final : public Defense {
 public:
  explicit TrimmedMeanDefense(std::size_t k) : k_(k) {}
  DefenseKind kind() const override { return DefenseKind::kTrimmedMean; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates, const RoundContext&) override {
    DefenseOutcome out;
    out.aggregated = trimmed_mean(sorted_by_client(updates), k_);
    return out;
  }

 private:
  std::size_t k_;
};

class FlTrustDefense final : public Defense {
 public:
  FlTrustDefense(data::Dataset root, protocol::FederationConfig fed)
      : root_(std::move(root)), fed_(std::move(fed)) {}
  DefenseKind kind() const override { return DefenseKind::kFlTrust; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    protocol::FederationConfig server_fed = fed_;
    server_fed.batch_size = std::min(fed_.batch_size, root_.size());
    const ParameterVector server = protocol::local_train_benign(
        *ctx.spec, *ctx.global, root_, server_fed,
        derive_seed(ctx.seed, Stream::kServer, {ctx.round}));
    return from_selection(updates, fltrust(updates, server, *ctx.global));
  }

 private:
  data::Dataset root_;
  protocol::FederationConfig fed_;
};

class FoolsGoldDefense final : public Defense {
 public:
  DefenseKind kind() const override { return DefenseKind::kFoolsGold; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    return from_selection(updates, state_.aggregate(updates, *ctx.global));
  }

 private:
  FoolsGold state_;
};

class FlameDefense final : public Defense {
 public:
  explicit FlameDefense(double noise) : noise_(noise) {}
  DefenseKind kind() const override { return DefenseKind::kFlame; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    return from_selection(
        updates, flame(updates, *ctx.global, noise_,
                       derive_seed(ctx.seed, Stream::kDefense, {ctx.round, 0xF1A})));
  }

 private:
  double noise_;
};

class RflbatDefense final : public Defense {
 public:
  DefenseKind kind() const override { return DefenseKind::kRflbat; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    return from_selection(updates, rflbat(updates, *ctx.global,
                                          derive_seed(ctx.seed, Stream::kDefense,
                                                      {ctx.round, 0xBA7})));
  }
};

class FlareDefense final : public Defense {
 public:
  FlareDefense(std::size_t neighbors, data::InspectionSet inspection)
      : neighbors_(neighbors), inspection_(std::move(inspection)) {}
  DefenseKind kind() const override { return DefenseKind::kFlare; }
  DefenseOutcome aggregate(std::span<const UploadedModel> updates,
                           const RoundContext& ctx) override {
    const auto sorted = sorted_by_client(updates);
    const EmbeddingCube cube = embed_uploads(*ctx.spec, sorted, inspection_);
    return from_selection(sorted, flare(sorted, *ctx.global, cube, neighbors_));
  }

 private:
  std::size_t neighbors_;
  data::InspectionSet inspection_;
};

}  // namespace

std::unique_ptr<Defense> make_defense(const DefenseConfig& cfg, DefenseResources res) {
  cfg.validate();
  switch (cfg.kind) {
    case DefenseKind::kFedAvg: return std::make_unique<FedAvgDefense>();
    case DefenseKind::kEmInspector:
      return std::make_unique<EmInspectorDefense>(cfg, std::move(res.inspection));
    case DefenseKind::kKrum: return std::make_unique<KrumDefense>(cfg.krum_c);
    case DefenseKind::kTrimmedMean: return std::make_unique<TrimmedMeanDefense>(cfg.trim_k);
    case DefenseKind::kFlTrust:
      if (res.root.size() < 2) throw ConfigError("FLTrust needs a root dataset");
      return std::make_unique<FlTrustDefense>(std::move(res.root), std::move(res.federation));
    case DefenseKind::kFoolsGold: return std::make_unique<FoolsGoldDefense>();
    case DefenseKind::kFlame: return std::make_unique<FlameDefense>(cfg.flame_noise);
    case DefenseKind::kRflbat: return std::make_unique<RflbatDefense>();
    case DefenseKind::kFlare:
      return std::make_unique<FlareDefense>(cfg.flare_neighbors, std::move(res.inspection));
  }
  throw ConfigError("unsupported defense kind");
}

}  // namespace fssl::defense

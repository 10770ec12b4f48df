#include "cdloss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cdloss/distance.hpp"
#include "reduce.hpp"

namespace cdl {

using detail::tree_sum;

LossKind parse_loss_kind(std::string_view name) {
  if (name == "soft_dice") return LossKind::soft_dice;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  if (name == "boundary") return LossKind::boundary;
  if (name == "perimeter") return LossKind::perimeter;
  if (name == "hausdorff_dt") return LossKind::hausdorff_dt;
  if (name == "contour_dice_v1") return LossKind::contour_dice_v1;
  if (name == "contour_dice") return LossKind::contour_dice;
  fail(ErrorCode::invalid_argument, "unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::soft_dice: return "soft_dice";
    case LossKind::cross_entropy: return "cross_entropy";
    case LossKind::boundary: return "boundary";
    case LossKind::perimeter: return "perimeter";
    case LossKind::hausdorff_dt: return "hausdorff_dt";
    case LossKind::contour_dice_v1: return "contour_dice_v1";
    case LossKind::contour_dice: return "contour_dice";
  }
  return "?";
}

void ContourLossConfig::validate() const {
  effective_threshold(t);
  contour.validate();
  if (band) band->validate();
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorCode::invalid_argument, "epsilon must be positive");
  }
}

void LossParams::validate() const {
  if (!(dice_epsilon > 0.0) || !std::isfinite(dice_epsilon)) {
    fail(ErrorCode::invalid_argument, "dice_epsilon must be positive");
  }
  contour.validate();
  if (!(hausdorff_alpha > 0.0) || !std::isfinite(hausdorff_alpha)) {
    fail(ErrorCode::invalid_argument, "hausdorff_alpha must be positive");
  }
  effective_threshold(hausdorff_t);
}

namespace {

constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;

double volume_size(const GridShape& s) { return static_cast<double>(s.size()); }

// Sum of p over the voxels selected by m.
double masked_sum(const ProbabilityVolume& p, const BinaryMask& m) {
  std::vector<double> v(p.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = m[i] ? p[i] : 0.0;
  return tree_sum(v);
}

BinaryMask band_of(const BinaryMask& m, const BinaryMask& contour, const ContourLossConfig& cfg) {
  return cfg.band ? extract_band(m, *cfg.band) : contour;
}

class SoftDice final : public FrozenLoss {
 public:
  SoftDice(const BinaryMask& g, double eps) : g_(g), eps_(eps) {}

  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), g_.shape(), "soft_dice_loss");
    const std::size_t n = p.size();
    std::vector<double> pg(n);
    for (std::size_t i = 0; i < n; ++i) pg[i] = g_[i] ? p[i] : 0.0;
    const double num = 2.0 * tree_sum(pg) + eps_;
    const double den = tree_sum(p.values()) + static_cast<double>(count_true(g_)) + eps_;
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double dnum = g_[i] ? 2.0 : 0.0;
      grad[i] = -(dnum * den - num) / (den * den);
    }
    return {-num / den, VoxelGrid(p.shape(), std::move(grad))};
  }

 private:
  BinaryMask g_;
  double eps_;
};

class CrossEntropy final : public FrozenLoss {
 public:
  explicit CrossEntropy(const BinaryMask& g) : g_(g) {}

  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), g_.shape(), "cross_entropy_loss");
    const std::size_t n = p.size();
    const double inv_n = 1.0 / volume_size(p.shape());
    std::vector<double> terms(n), grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double pc = std::clamp(p[i], kClampLo, kClampHi);
      const bool clamped = p[i] < kClampLo || p[i] > kClampHi;
      if (g_[i]) {
        terms[i] = -std::log(pc);
        grad[i] = clamped ? 0.0 : -inv_n / pc;
      } else {
        terms[i] = -std::log1p(-pc);
        grad[i] = clamped ? 0.0 : inv_n / (1.0 - pc);
      }
    }
    return {tree_sum(terms) * inv_n, VoxelGrid(p.shape(), std::move(grad))};
  }

 private:
  BinaryMask g_;
};

// value = mean(phi_g * p) with phi_g the signed distance of the ground truth.
class Boundary final : public FrozenLoss {
 public:
  explicit Boundary(const BinaryMask& g) : phi_(signed_distance(g)) {}

  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), phi_.shape(), "boundary_loss");
    const std::size_t n = p.size();
    const double inv_n = 1.0 / volume_size(p.shape());
    std::vector<double> terms(n), grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      terms[i] = phi_[i] * p[i];
      grad[i] = phi_[i] * inv_n;
    }
    return {tree_sum(terms) * inv_n, VoxelGrid(p.shape(), std::move(grad))};
  }

 private:
  VoxelGrid phi_;
};

class HausdorffDt final : public FrozenLoss {
 public:
  HausdorffDt(const ProbabilityVolume& ref, const BinaryMask& g, double alpha, double t)
      : g_(g), weight_(make_weight(ref, g, alpha, t)) {}

  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), g_.shape(), "hausdorff_dt_loss");
    const std::size_t n = p.size();
    const double inv_n = 1.0 / volume_size(p.shape());
    std::vector<double> terms(n), grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = p[i] - (g_[i] ? 1.0 : 0.0);
      terms[i] = e * e * weight_[i];
      grad[i] = 2.0 * e * weight_[i] * inv_n;
    }
    return {tree_sum(terms) * inv_n, VoxelGrid(p.shape(), std::move(grad))};
  }

 private:
  static std::vector<double> make_weight(const ProbabilityVolume& ref, const BinaryMask& g, double alpha,
                                         double t) {
    require_same_dims(ref.shape(), g.shape(), "hausdorff_dt_loss");
    if (count_true(g) == 0) fail(ErrorCode::empty_mask, "hausdorff_dt_loss: ground truth is empty");
    const auto dg = edt(g);
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::pow(dg[i], alpha);
    const auto s = binarize(ref, t);
    if (count_true(s) > 0) {
      const auto ds = edt(s);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += std::pow(ds[i], alpha);
    }
    return w;
  }

  BinaryMask g_;
  std::vector<double> weight_;
};

class Perimeter final : public FrozenLoss {
 public:
  Perimeter(const ProbabilityVolume& ref, const BinaryMask& g, const ContourLossConfig& cfg)
      : region_(extract_contour(binarize(ref, cfg.t), cfg.contour)),
        truth_perimeter_(static_cast<double>(count_true(extract_contour(g, cfg.contour)))) {
    require_same_dims(ref.shape(), g.shape(), "perimeter_loss");
  }

  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), region_.shape(), "perimeter_loss");
    const double inv_n = 1.0 / volume_size(p.shape());
    const double diff = masked_sum(p, region_) - truth_perimeter_;
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = region_[i] ? 2.0 * diff * inv_n : 0.0;
    return {diff * diff * inv_n, VoxelGrid(p.shape(), std::move(grad))};
  }

 private:
  BinaryMask region_;
  double truth_perimeter_;
};

// -(num + eps) / (den + eps) with num/den linear in p:
//   num = sum(num_coef * p) over the frozen regions,
//   den = den_const + sum(den_coef * p).
class RatioLoss : public FrozenLoss {
 public:
  LossResult evaluate(const ProbabilityVolume& p) const override {
    require_same_dims(p.shape(), num_coef_.shape(), name_);
    const std::size_t n = p.size();
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = num_coef_[i] * p[i];
      b[i] = den_coef_[i] * p[i];
    }
    const double num = tree_sum(a) + eps_;
    const double den = den_const_ + tree_sum(b) + eps_;
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = -(num_coef_[i] * den - num * den_coef_[i]) / (den * den);
    }
    return {-num / den, VoxelGrid(p.shape(), std::move(grad))};
  }

 protected:
  RatioLoss(const char* name, VoxelGrid num_coef, VoxelGrid den_coef, double den_const, double eps)
      : name_(name),
        num_coef_(std::move(num_coef)),
        den_coef_(std::move(den_coef)),
        den_const_(den_const),
        eps_(eps) {}

  static VoxelGrid indicator_sum(const GridShape& s, std::initializer_list<std::pair<const BinaryMask*, double>> terms) {
    std::vector<double> v(s.size(), 0.0);
    for (const auto& [m, w] : terms) {
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += (*m)[i] ? w : 0.0;
    }
    return VoxelGrid(s, std::move(v));
  }

 private:
  const char* name_;
  VoxelGrid num_coef_;
  VoxelGrid den_coef_;
  double den_const_;
  double eps_;
};

struct PredictionRegions {
  BinaryMask contour;
  BinaryMask band;
};

PredictionRegions regions_of(const BinaryMask& m, const ContourLossConfig& cfg) {
  auto c = extract_contour(m, cfg.contour);
  auto b = band_of(m, c, cfg);
  return {std::move(c), std::move(b)};
}

// -(2 sum_{B_T ∩ B_S} p + eps) / (|B_T| + sum_{B_S} p + eps)
class ContourDiceV1 final : public RatioLoss {
 public:
  static std::unique_ptr<FrozenLoss> make(const ProbabilityVolume& ref, const BinaryMask& g,
                                          const ContourLossConfig& cfg) {
    require_same_dims(ref.shape(), g.shape(), "contour_dice_loss_v1");
    const auto t = regions_of(g, cfg);
    const auto s = regions_of(binarize(ref, cfg.t), cfg);
    const auto inter = mask_and(t.band, s.band);
    return std::unique_ptr<FrozenLoss>(new ContourDiceV1(
        indicator_sum(g.shape(), {{&inter, 2.0}}), indicator_sum(g.shape(), {{&s.band, 1.0}}),
        static_cast<double>(count_true(t.band)), cfg.epsilon));
  }

 private:
  ContourDiceV1(VoxelGrid nc, VoxelGrid dc, double k, double eps)
      : RatioLoss("contour_dice_loss_v1", std::move(nc), std::move(dc), k, eps) {}
};

// -(sum_{dT ∩ B_S} p + sum_{dS ∩ B_T} p + eps) / (|dT| + sum_{dS} p + eps)
class ContourDice final : public RatioLoss {
 public:
  static std::unique_ptr<FrozenLoss> make(const ProbabilityVolume& ref, const BinaryMask& g,
                                          const ContourLossConfig& cfg) {
    require_same_dims(ref.shape(), g.shape(), "contour_dice_loss");
    const auto t = regions_of(g, cfg);
    const auto s = regions_of(binarize(ref, cfg.t), cfg);
    const auto t_in_s = mask_and(t.contour, s.band);
    const auto s_in_t = mask_and(s.contour, t.band);
    return std::unique_ptr<FrozenLoss>(new ContourDice(
        indicator_sum(g.shape(), {{&t_in_s, 1.0}, {&s_in_t, 1.0}}),
        indicator_sum(g.shape(), {{&s.contour, 1.0}}), static_cast<double>(count_true(t.contour)),
        cfg.epsilon));
  }

 private:
  ContourDice(VoxelGrid nc, VoxelGrid dc, double k, double eps)
      : RatioLoss("contour_dice_loss", std::move(nc), std::move(dc), k, eps) {}
};

}  // namespace

std::unique_ptr<FrozenLoss> freeze_loss(LossKind kind, const ProbabilityVolume& reference,
                                        const BinaryMask& g, const LossParams& params) {
  params.validate();
  require_same_dims(reference.shape(), g.shape(), "loss");
  switch (kind) {
    case LossKind::soft_dice: return std::make_unique<SoftDice>(g, params.dice_epsilon);
    case LossKind::cross_entropy: return std::make_unique<CrossEntropy>(g);
    case LossKind::boundary: return std::make_unique<Boundary>(g);
    case LossKind::hausdorff_dt:
      return std::make_unique<HausdorffDt>(reference, g, params.hausdorff_alpha, params.hausdorff_t);
    case LossKind::perimeter: return std::make_unique<Perimeter>(reference, g, params.contour);
    case LossKind::contour_dice_v1: return ContourDiceV1::make(reference, g, params.contour);
    case LossKind::contour_dice: return ContourDice::make(reference, g, params.contour);
  }
  fail(ErrorCode::internal, "unhandled loss kind");
}

LossResult compute_loss(LossKind kind, const ProbabilityVolume& p, const BinaryMask& g,
                        const LossParams& params) {
  return freeze_loss(kind, p, g, params)->evaluate(p);
}

LossResult soft_dice_loss(const ProbabilityVolume& p, const BinaryMask& g, double epsilon) {
  LossParams params;
  params.dice_epsilon = epsilon;
  return compute_loss(LossKind::soft_dice, p, g, params);
}

LossResult cross_entropy_loss(const ProbabilityVolume& p, const BinaryMask& g) {
  return compute_loss(LossKind::cross_entropy, p, g, {});
}

LossResult boundary_loss(const ProbabilityVolume& p, const BinaryMask& g) {
  return compute_loss(LossKind::boundary, p, g, {});
}

LossResult hausdorff_dt_loss(const ProbabilityVolume& p, const BinaryMask& g, double alpha, double t) {
  LossParams params;
  params.hausdorff_alpha = alpha;
  params.hausdorff_t = t;
  return compute_loss(LossKind::hausdorff_dt, p, g, params);
}

LossResult perimeter_loss(const ProbabilityVolume& p, const BinaryMask& g, const ContourLossConfig& cfg) {
  LossParams params;
  params.contour = cfg;
  return compute_loss(LossKind::perimeter, p, g, params);
}

LossResult contour_dice_loss_v1(const ProbabilityVolume& p, const BinaryMask& g,
                                const ContourLossConfig& cfg) {
  LossParams params;
  params.contour = cfg;
  return compute_loss(LossKind::contour_dice_v1, p, g, params);
}

LossResult contour_dice_loss(const ProbabilityVolume& p, const BinaryMask& g, const ContourLossConfig& cfg) {
  LossParams params;
  params.contour = cfg;
  return compute_loss(LossKind::contour_dice, p, g, params);
}

// ---------------------------------------------------------------------------

WeightSchedule WeightSchedule::constant(double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    fail(ErrorCode::invalid_argument, "constant weight must be finite and >= 0");
  }
  return {Kind::constant, gamma, 0.0};
}

WeightSchedule WeightSchedule::ramp(double init, double step) {
  if (!(init > 0.0) || !(step >= 0.0) || !std::isfinite(init) || !std::isfinite(step)) {
    fail(ErrorCode::invalid_argument, "ramp weight needs init > 0 and step >= 0");
  }
  return {Kind::ramp, init, step};
}

double WeightSchedule::at(std::uint64_t epoch) const noexcept {
  if (kind_ == Kind::constant) return init_;
  return init_ + step_ * static_cast<double>(epoch);
}

Companion parse_companion(std::string_view name) {
  if (name == "none") return Companion::none;
  if (name == "cross_entropy") return Companion::cross_entropy;
  if (name == "boundary") return Companion::boundary;
  if (name == "perimeter") return Companion::perimeter;
  if (name == "hausdorff_dt") return Companion::hausdorff_dt;
  if (name == "contour_dice_v1") return Companion::contour_dice_v1;
  if (name == "contour_dice") return Companion::contour_dice;
  fail(ErrorCode::invalid_argument, "unknown companion loss '" + std::string(name) + "'");
}

std::string_view to_string(Companion c) {
  if (c == Companion::none) return "none";
  return to_string(*companion_loss(c));
}

std::optional<LossKind> companion_loss(Companion c) {
  switch (c) {
    case Companion::none: return std::nullopt;
    case Companion::cross_entropy: return LossKind::cross_entropy;
    case Companion::boundary: return LossKind::boundary;
    case Companion::perimeter: return LossKind::perimeter;
    case Companion::hausdorff_dt: return LossKind::hausdorff_dt;
    case Companion::contour_dice_v1: return LossKind::contour_dice_v1;
    case Companion::contour_dice: return LossKind::contour_dice;
  }
  return std::nullopt;
}

CompoundLossSpec CompoundLossSpec::defaults(Companion companion) {
  CompoundLossSpec spec;
  spec.companion = companion;
  spec.label = companion == Companion::none ? "dice" : "dice+" + std::string(to_string(companion));
  switch (companion) {
    case Companion::none: spec.weight = WeightSchedule::constant(0.0); break;
    case Companion::cross_entropy: spec.weight = WeightSchedule::constant(1.0); break;
    case Companion::contour_dice:
    case Companion::contour_dice_v1:
      spec.weight = WeightSchedule::constant(0.5);
      spec.params.contour.t = 1.0;
      break;
    case Companion::perimeter:
      spec.weight = WeightSchedule::ramp(0.01, 0.01);
      spec.params.contour.t = 0.5;
      break;
    case Companion::boundary:
    case Companion::hausdorff_dt: spec.weight = WeightSchedule::ramp(0.01, 0.01); break;
  }
  return spec;
}

void CompoundLossSpec::validate() const { params.validate(); }

CompoundResult compound_loss(const ProbabilityVolume& p, const BinaryMask& g, const CompoundLossSpec& spec,
                             std::uint64_t epoch) {
  spec.validate();
  auto base = compute_loss(LossKind::soft_dice, p, g, spec.params);
  const auto kind = companion_loss(spec.companion);
  if (!kind) return {base.value, std::move(base.grad), base.value, 0.0, 0.0};

  const double w = spec.weight.at(epoch);
  const auto comp = compute_loss(*kind, p, g, spec.params);
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = base.grad[i] + w * comp.grad[i];
  return {base.value + w * comp.value, VoxelGrid(p.shape(), std::move(grad)), base.value, comp.value, w};
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(LossKind kind, const ProbabilityVolume& p, const BinaryMask& g,
                           const LossParams& params, const GradCheckOptions& opts) {
  if (!(opts.h > 0.0) || opts.h >= opts.margin) {
    fail(ErrorCode::invalid_argument, "grad_check needs 0 < h < margin");
  }
  const auto frozen = freeze_loss(kind, p, g, params);
  const auto analytic = frozen->evaluate(p);

  std::vector<double> thresholds;
  if (kind == LossKind::perimeter || kind == LossKind::contour_dice || kind == LossKind::contour_dice_v1) {
    thresholds.push_back(effective_threshold(params.contour.t));
  } else if (kind == LossKind::hausdorff_dt) {
    thresholds.push_back(effective_threshold(params.hausdorff_t));
  }

  std::vector<std::size_t> active, passive;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double v = p[i];
    if (v < opts.margin || v > 1.0 - opts.margin) continue;
    if (std::any_of(thresholds.begin(), thresholds.end(),
                    [&](double t) { return std::abs(v - t) <= opts.margin; })) {
      continue;
    }
    (analytic.grad[i] != 0.0 ? active : passive).push_back(i);
  }
  if (active.empty() && passive.empty()) {
    fail(ErrorCode::invalid_argument, "grad_check: no voxel is clear of the clamp and threshold zones");
  }

  // Partial Fisher-Yates on the raw engine output keeps the draw identical
  // across standard library implementations.
  std::mt19937_64 rng(opts.seed);
  auto shuffle = [&rng](std::vector<std::size_t>& pool) {
    for (std::size_t j = 0; j + 1 < pool.size(); ++j) {
      const std::size_t r = j + static_cast<std::size_t>(rng() % (pool.size() - j));
      std::swap(pool[j], pool[r]);
    }
  };
  shuffle(active);
  shuffle(passive);
  std::size_t take_active = std::min(active.size(), (opts.samples + 1) / 2);
  const std::size_t take_passive = std::min(passive.size(), opts.samples - take_active);
  take_active = std::min(active.size(), opts.samples - take_passive);
  std::vector<std::size_t> picks(active.begin(), active.begin() + static_cast<std::ptrdiff_t>(take_active));
  picks.insert(picks.end(), passive.begin(), passive.begin() + static_cast<std::ptrdiff_t>(take_passive));

  GradCheckResult res;
  std::vector<double> work(p.values().begin(), p.values().end());
  for (std::size_t i : picks) {
    const double orig = work[i];
    work[i] = orig + opts.h;
    const double up = frozen->evaluate(ProbabilityVolume(p.shape(), work)).value;
    work[i] = orig - opts.h;
    const double down = frozen->evaluate(ProbabilityVolume(p.shape(), work)).value;
    work[i] = orig;
    const double numeric = (up - down) / (2.0 * opts.h);
    const double a = analytic.grad[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
    ++res.checked;
    if (a != 0.0) ++res.nonzero;
    if (res.checked == 1 || rel > res.max_rel_error) {
      res.max_rel_error = rel;
      res.worst_index = i;
    }
  }
  return res;
}

}  // namespace cdl

#include "d2s/stream/stream.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "d2s/nn/interaction.hpp"
#include "d2s/nn/loss.hpp"
#include "d2s/rng.hpp"

namespace d2s {

void StreamConfig::validate() const {
  if (dense_dim < 1)
    throw std::invalid_argument("configuration error: dense_dim must be >= 1");
  if (table_rows.empty())
    throw std::invalid_argument(
        "configuration error: the stream needs at least one table");
  if (multiplicity.size() != table_rows.size())
    throw std::invalid_argument(
        "configuration error: multiplicity must list one count per table");
  for (int m : multiplicity)
    if (m < 1)
      throw std::invalid_argument(
          "configuration error: feature multiplicity must be >= 1");
  for (int r : table_rows)
    if (r < 1)
      throw std::invalid_argument(
          "configuration error: table rows must be >= 1");
  if (!(zipf_exponent > 0.0))
    throw std::invalid_argument(
        "configuration error: zipf_exponent must be positive");
  if (label_noise < 0.0 || label_noise > 1.0)
    throw std::invalid_argument(
        "configuration error: label_noise must be in [0, 1]");
  if (batch_size < 1)
    throw std::invalid_argument("configuration error: batch_size must be >= 1");
  if (teacher_bottom.empty() || teacher_top.empty())
    throw std::invalid_argument(
        "configuration error: teacher MLPs must be non-empty");
  if (teacher_bottom.back() != teacher_embedding_dim)
    throw std::invalid_argument(
        "configuration error: teacher bottom output must equal the teacher "
        "embedding dim");
  if (teacher_top.back() != 1)
    throw std::invalid_argument(
        "configuration error: teacher top MLP must end in a single logit");
  if (!(teacher_gain > 0.0))
    throw std::invalid_argument(
        "configuration error: teacher_gain must be positive");
}

void DriftSchedule::validate() const {
  if (anchor_times.empty() || anchor_times.front() != 0)
    throw std::invalid_argument(
        "configuration error: anchor_times must start at 0");
  for (size_t i = 1; i < anchor_times.size(); ++i)
    if (anchor_times[i] <= anchor_times[i - 1])
      throw std::invalid_argument(
          "configuration error: anchor_times must be strictly increasing");
  if (drift_magnitude < 0.0 || drift_magnitude > 2.0)
    throw std::invalid_argument(
        "configuration error: drift_magnitude must be in [0, 2] (a chord of "
        "the parameter sphere)");
  if (popularity_drift < 0.0 || popularity_drift > 1.0)
    throw std::invalid_argument(
        "configuration error: popularity_drift must be in [0, 1]");
}

// --- teacher parameter plumbing ---

template <class P, class F>
static void for_each_buffer(P& p, F&& f) {
  for (auto& m : p.bottom_w) f(m.v);
  for (auto& v : p.bottom_b) f(v);
  for (auto& m : p.tables) f(m.v);
  for (auto& m : p.top_w) f(m.v);
  for (auto& v : p.top_b) f(v);
}

template <class PA, class PB, class F>
static void for_each_buffer_pair(PA& a, PB& b, F&& f) {
  for (size_t i = 0; i < a.bottom_w.size(); ++i)
    f(a.bottom_w[i].v, b.bottom_w[i].v);
  for (size_t i = 0; i < a.bottom_b.size(); ++i) f(a.bottom_b[i], b.bottom_b[i]);
  for (size_t i = 0; i < a.tables.size(); ++i) f(a.tables[i].v, b.tables[i].v);
  for (size_t i = 0; i < a.top_w.size(); ++i) f(a.top_w[i].v, b.top_w[i].v);
  for (size_t i = 0; i < a.top_b.size(); ++i) f(a.top_b[i], b.top_b[i]);
}

// MLP block only: the drifting part of the teacher. Table content stays
// put between anchors; content churn is modeled by the popularity
// permutations instead.
template <class P, class F>
static void for_each_mlp_buffer(P& p, F&& f) {
  for (auto& m : p.bottom_w) f(m.v);
  for (auto& v : p.bottom_b) f(v);
  for (auto& m : p.top_w) f(m.v);
  for (auto& v : p.top_b) f(v);
}

template <class PA, class PB, class F>
static void for_each_mlp_buffer_pair(PA& a, PB& b, F&& f) {
  for (size_t i = 0; i < a.bottom_w.size(); ++i)
    f(a.bottom_w[i].v, b.bottom_w[i].v);
  for (size_t i = 0; i < a.bottom_b.size(); ++i) f(a.bottom_b[i], b.bottom_b[i]);
  for (size_t i = 0; i < a.top_w.size(); ++i) f(a.top_w[i].v, b.top_w[i].v);
  for (size_t i = 0; i < a.top_b.size(); ++i) f(a.top_b[i], b.top_b[i]);
}

double teacher_norm(const TeacherParams& p) {
  double s = 0.0;
  for_each_buffer(p, [&](const Vector& v) {
    for (double x : v) s += x * x;
  });
  return std::sqrt(s);
}

double teacher_mlp_norm(const TeacherParams& p) {
  double s = 0.0;
  for_each_mlp_buffer(p, [&](const Vector& v) {
    for (double x : v) s += x * x;
  });
  return std::sqrt(s);
}

double teacher_distance(const TeacherParams& a, const TeacherParams& b) {
  double s = 0.0;
  for_each_buffer_pair(a, b, [&](const Vector& va, const Vector& vb) {
    for (size_t i = 0; i < va.size(); ++i) {
      const double d = va[i] - vb[i];
      s += d * d;
    }
  });
  return std::sqrt(s);
}

static inline double lerp(double a, double b, double u) {
  return a + (b - a) * u;
}

static TeacherParams make_anchor_shape(const StreamConfig& cfg) {
  TeacherParams p;
  int in = cfg.dense_dim;
  for (int out : cfg.teacher_bottom) {
    p.bottom_w.emplace_back(out, in);
    p.bottom_b.emplace_back(out, 0.0);
    in = out;
  }
  for (int rows : cfg.table_rows)
    p.tables.emplace_back(rows, cfg.teacher_embedding_dim);
  in = interaction_width(cfg.teacher_embedding_dim,
                         static_cast<int>(cfg.table_rows.size()) + 1);
  for (int out : cfg.teacher_top) {
    p.top_w.emplace_back(out, in);
    p.top_b.emplace_back(out, 0.0);
    in = out;
  }
  return p;
}

Teacher::Teacher(const StreamConfig& cfg, const DriftSchedule& sched)
    : cfg_(cfg), sched_(sched) {
  cfg_.validate();
  sched_.validate();

  TeacherParams a0 = make_anchor_shape(cfg_);
  uint64_t k = 0;
  auto init_matrix = [&](Matrix& m) {
    Rng rng(mix_keys(sched_.seed, 0xA0C0ull, k++));
    const double bound =
        cfg_.teacher_gain * std::sqrt(6.0 / static_cast<double>(m.rows + m.cols));
    for (auto& x : m.v) x = rng.next_uniform(-bound, bound);
  };
  for (auto& m : a0.bottom_w) init_matrix(m);
  for (auto& m : a0.tables) init_matrix(m);
  for (auto& m : a0.top_w) init_matrix(m);
  // biases start at 0 at the first anchor but are free to drift

  anchors_.push_back(std::move(a0));
  // Each hop rotates the teacher's MLP parameters inside the sphere of
  // their current norm: the chord between consecutive anchors is exactly
  // drift_magnitude * ||MLP block||, so preference shift changes the shape
  // of the labeling function without inflating its confidence. The same
  // base direction is re-orthogonalized at every anchor, which makes the
  // walk follow one great circle: mismatch against any frozen snapshot
  // accumulates steadily instead of wandering back. Table content stays
  // fixed between anchors; content churn comes from the popularity
  // permutations.
  const int hops = static_cast<int>(sched_.anchor_times.size()) - 1;
  for (int j = 0; j < hops; ++j) {
    TeacherParams next = anchors_.back();
    if (sched_.drift_magnitude > 0.0) {
      TeacherParams dir = make_anchor_shape(cfg_);
      uint64_t kk = 0;
      for_each_mlp_buffer(dir, [&](Vector& v) {
        Rng rng(mix_keys(sched_.seed, 0xD21F7ull, kk++));
        for (auto& x : v) x = rng.next_normal();
      });
      const double norm_a = teacher_mlp_norm(anchors_.back());
      double dot = 0.0;
      for_each_mlp_buffer_pair(next, dir, [&](Vector& vn, const Vector& vd) {
        for (size_t i = 0; i < vn.size(); ++i) dot += vn[i] * vd[i];
      });
      // orthogonalize the direction against the current anchor
      double perp_sq = 0.0;
      const double proj = dot / (norm_a * norm_a);
      for_each_mlp_buffer_pair(dir, next, [&](Vector& vd, const Vector& vn) {
        for (size_t i = 0; i < vd.size(); ++i) {
          vd[i] -= proj * vn[i];
          perp_sq += vd[i] * vd[i];
        }
      });
      if (perp_sq > 0.0 && norm_a > 0.0) {
        const double phi =
            2.0 * std::asin(std::min(1.0, 0.5 * sched_.drift_magnitude));
        const double c = std::cos(phi);
        const double s = std::sin(phi) * norm_a / std::sqrt(perp_sq);
        for_each_mlp_buffer_pair(next, dir, [&](Vector& vn, const Vector& vd) {
          for (size_t i = 0; i < vn.size(); ++i)
            vn[i] = c * vn[i] + s * vd[i];
        });
      }
    }
    anchors_.push_back(std::move(next));
  }
}

std::pair<int, double> Teacher::segment_at(uint64_t t) const {
  const auto& at = sched_.anchor_times;
  const int last = static_cast<int>(at.size()) - 1;
  if (t >= at[last]) return {last, 0.0};
  int j = static_cast<int>(std::upper_bound(at.begin(), at.end(), t) -
                           at.begin()) -
          1;
  if (t == at[j]) return {j, 0.0};
  const double u = static_cast<double>(t - at[j]) /
                   static_cast<double>(at[j + 1] - at[j]);
  return {j, u};
}

TeacherParams Teacher::at(uint64_t t) const {
  auto [j, u] = segment_at(t);
  if (u == 0.0) return anchors_[j];
  TeacherParams out = anchors_[j];
  const TeacherParams& b = anchors_[j + 1];
  for_each_buffer_pair(out, b, [&](Vector& vo, const Vector& vb) {
    for (size_t i = 0; i < vo.size(); ++i) vo[i] = lerp(vo[i], vb[i], u);
  });
  return out;
}

// Parameter accessors for the scalar evaluation path. The lerp accessor
// reads both anchors and interpolates each scalar exactly once, matching
// what a materialized at(t) would contain.
namespace {
struct DirectAcc {
  const TeacherParams& p;
  double bw(int l, int o, int i, int in) const {
    return p.bottom_w[l].v[static_cast<size_t>(o) * in + i];
  }
  double bb(int l, int o) const { return p.bottom_b[l][o]; }
  double tab(int f, uint32_t r, int d, int dim) const {
    return p.tables[f].v[static_cast<size_t>(r) * dim + d];
  }
  double tw(int l, int o, int i, int in) const {
    return p.top_w[l].v[static_cast<size_t>(o) * in + i];
  }
  double tb(int l, int o) const { return p.top_b[l][o]; }
};

struct LerpAcc {
  const TeacherParams& a;
  const TeacherParams& b;
  double u;
  double bw(int l, int o, int i, int in) const {
    const size_t k = static_cast<size_t>(o) * in + i;
    return lerp(a.bottom_w[l].v[k], b.bottom_w[l].v[k], u);
  }
  double bb(int l, int o) const {
    return lerp(a.bottom_b[l][o], b.bottom_b[l][o], u);
  }
  double tab(int f, uint32_t r, int d, int dim) const {
    const size_t k = static_cast<size_t>(r) * dim + d;
    return lerp(a.tables[f].v[k], b.tables[f].v[k], u);
  }
  double tw(int l, int o, int i, int in) const {
    const size_t k = static_cast<size_t>(o) * in + i;
    return lerp(a.top_w[l].v[k], b.top_w[l].v[k], u);
  }
  double tb(int l, int o) const { return lerp(a.top_b[l][o], b.top_b[l][o], u); }
};

template <class Acc>
double teacher_eval(const StreamConfig& cfg, const Acc& P, const double* dense,
                    const uint32_t* const* ids, const int* id_counts,
                    TeacherScratch& s) {
  // bottom MLP, ReLU throughout
  s.a.assign(dense, dense + cfg.dense_dim);
  const int n_bottom = static_cast<int>(cfg.teacher_bottom.size());
  for (int l = 0; l < n_bottom; ++l) {
    const int out = cfg.teacher_bottom[l];
    const int in = static_cast<int>(s.a.size());
    s.b.resize(static_cast<size_t>(out));
    for (int o = 0; o < out; ++o) {
      double z = P.bb(l, o);
      for (int i = 0; i < in; ++i) z += P.bw(l, o, i, in) * s.a[i];
      s.b[o] = z > 0.0 ? z : 0.0;
    }
    std::swap(s.a, s.b);
  }

  // embedding mean pooling
  const int dim = cfg.teacher_embedding_dim;
  const int n_tables = static_cast<int>(cfg.table_rows.size());
  s.pooled.assign(static_cast<size_t>(n_tables * dim), 0.0);
  for (int f = 0; f < n_tables; ++f) {
    double* pr = s.pooled.data() + static_cast<size_t>(f) * dim;
    const int cnt = id_counts[f];
    if (cnt == 0) continue;
    for (int k = 0; k < cnt; ++k) {
      const uint32_t id = ids[f][k];
      for (int d = 0; d < dim; ++d) pr[d] += P.tab(f, id, d, dim);
    }
    const double inv = 1.0 / static_cast<double>(cnt);
    for (int d = 0; d < dim; ++d) pr[d] *= inv;
  }

  // pairwise interaction
  const int n_vec = n_tables + 1;
  s.vec_ptr.resize(static_cast<size_t>(n_vec));
  s.vec_ptr[0] = s.a.data();
  for (int f = 0; f < n_tables; ++f)
    s.vec_ptr[f + 1] = s.pooled.data() + static_cast<size_t>(f) * dim;
  s.inter.resize(static_cast<size_t>(interaction_width(dim, n_vec)));
  dot_interaction_into(s.vec_ptr.data(), n_vec, dim, s.inter.data());

  // top MLP, last layer linear
  const Vector* cur = &s.inter;
  const int n_top = static_cast<int>(cfg.teacher_top.size());
  for (int l = 0; l < n_top; ++l) {
    const int out = cfg.teacher_top[l];
    const int in = static_cast<int>(cur->size());
    Vector& dst = (cur == &s.a) ? s.b : s.a;
    dst.resize(static_cast<size_t>(out));
    for (int o = 0; o < out; ++o) {
      double z = P.tb(l, o);
      for (int i = 0; i < in; ++i) z += P.tw(l, o, i, in) * (*cur)[i];
      dst[o] = (l + 1 < n_top && z < 0.0) ? 0.0 : z;
    }
    cur = &dst;
  }
  return sigmoid((*cur)[0]);
}
}  // namespace

double Teacher::prob(uint64_t t, const double* dense,
                     const uint32_t* const* ids, const int* id_counts,
                     TeacherScratch& scratch) const {
  auto [j, u] = segment_at(t);
  if (u == 0.0) {
    return teacher_eval(cfg_, DirectAcc{anchors_[j]}, dense, ids, id_counts,
                        scratch);
  }
  return teacher_eval(cfg_, LerpAcc{anchors_[j], anchors_[j + 1], u}, dense,
                      ids, id_counts, scratch);
}

TeacherParams teacher_at(const Teacher& t, uint64_t time) {
  return t.at(time);
}

double drift_distance(const Teacher& t, uint64_t t1, uint64_t t2) {
  return teacher_distance(t.at(t1), t.at(t2));
}

// --- stream generator ---

StreamGenerator::StreamGenerator(StreamConfig cfg, DriftSchedule sched)
    : cfg_(std::move(cfg)), sched_(std::move(sched)), teacher_(cfg_, sched_) {
  const int n_tables = static_cast<int>(cfg_.table_rows.size());
  zipf_cdf_.resize(static_cast<size_t>(n_tables));
  for (int f = 0; f < n_tables; ++f) {
    const int rows = cfg_.table_rows[f];
    Vector& cdf = zipf_cdf_[f];
    cdf.resize(static_cast<size_t>(rows));
    double total = 0.0;
    for (int k = 0; k < rows; ++k) {
      total += std::pow(static_cast<double>(k + 1), -cfg_.zipf_exponent);
      cdf[k] = total;
    }
    for (auto& c : cdf) c /= total;
  }

  const int n_anchors =
      static_cast<int>(sched_.anchor_times.size());
  perms_.resize(static_cast<size_t>(n_tables));
  for (int f = 0; f < n_tables; ++f) {
    const uint32_t rows = static_cast<uint32_t>(cfg_.table_rows[f]);
    auto& per_anchor = perms_[f];
    per_anchor.resize(static_cast<size_t>(n_anchors));
    std::vector<uint32_t>& p0 = per_anchor[0];
    p0.resize(rows);
    for (uint32_t i = 0; i < rows; ++i) p0[i] = i;
    Rng r0(mix_keys(sched_.seed, 0x5EED0ull, static_cast<uint64_t>(f)));
    for (uint32_t i = rows; i > 1; --i) {
      const uint32_t j = static_cast<uint32_t>(r0.next_below(i));
      std::swap(p0[i - 1], p0[j]);
    }
    const auto swaps = static_cast<uint64_t>(
        std::llround(sched_.popularity_drift * static_cast<double>(rows)));
    for (int a = 1; a < n_anchors; ++a) {
      per_anchor[a] = per_anchor[a - 1];
      if (swaps == 0) continue;
      Rng rs(mix_keys(sched_.seed, 0x5EED1ull + static_cast<uint64_t>(a),
                      static_cast<uint64_t>(f)));
      for (uint64_t sidx = 0; sidx < swaps; ++sidx) {
        const uint32_t i = static_cast<uint32_t>(rs.next_below(rows));
        const uint32_t j = static_cast<uint32_t>(rs.next_below(rows));
        std::swap(per_anchor[a][i], per_anchor[a][j]);
      }
    }
  }
}

uint32_t StreamGenerator::zipf_rank(int table, double u) const {
  const Vector& cdf = zipf_cdf_[table];
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  const size_t idx = static_cast<size_t>(it - cdf.begin());
  return static_cast<uint32_t>(std::min(idx, cdf.size() - 1));
}

uint32_t StreamGenerator::drifted_id(int table, uint32_t rank, int seg,
                                     double frac, double u_blend) const {
  const auto& per_anchor = perms_[table];
  const int last = static_cast<int>(per_anchor.size()) - 1;
  const int use = (frac > 0.0 && u_blend < frac) ? std::min(seg + 1, last)
                                                 : seg;
  return per_anchor[use][rank];
}

Batch StreamGenerator::batch(uint64_t t, int n) const {
  if (n < 1)
    throw std::runtime_error("data error: batch size must be >= 1");
  const int n_tables = static_cast<int>(cfg_.table_rows.size());
  Batch b;
  b.virtual_time = t;
  b.dense.resize(n, cfg_.dense_dim);
  b.labels.resize(static_cast<size_t>(n));
  b.ids.resize(static_cast<size_t>(n_tables));
  b.offsets.assign(static_cast<size_t>(n_tables),
                   std::vector<uint32_t>(static_cast<size_t>(n) + 1, 0));
  for (int f = 0; f < n_tables; ++f)
    b.ids[f].reserve(static_cast<size_t>(n) * cfg_.multiplicity[f]);

  TeacherScratch scratch;
  std::vector<const uint32_t*> id_ptr(static_cast<size_t>(n_tables));
  std::vector<int> id_cnt(static_cast<size_t>(n_tables));

  for (int i = 0; i < n; ++i) {
    const uint64_t s = t + static_cast<uint64_t>(i);
    Rng rx(mix_keys(cfg_.seed, s, 0xD47Aull));
    double* dr = b.dense.row(i);
    for (int d = 0; d < cfg_.dense_dim; ++d) dr[d] = rx.next_normal();

    const auto [seg, frac] = teacher_.segment_at(s);
    Rng rc(mix_keys(cfg_.seed, s, 0xCA7Eull));
    for (int f = 0; f < n_tables; ++f) {
      const size_t start = b.ids[f].size();
      for (int k = 0; k < cfg_.multiplicity[f]; ++k) {
        const uint32_t rank = zipf_rank(f, rc.next_double());
        b.ids[f].push_back(drifted_id(f, rank, seg, frac, rc.next_double()));
      }
      b.offsets[f][static_cast<size_t>(i) + 1] =
          static_cast<uint32_t>(b.ids[f].size());
      id_ptr[f] = b.ids[f].data() + start;
      id_cnt[f] = cfg_.multiplicity[f];
    }

    const double p =
        teacher_.prob(s, dr, id_ptr.data(), id_cnt.data(), scratch);
    Rng rl(mix_keys(cfg_.seed, s, 0x1AB31ull));
    double y = rl.next_double() < p ? 1.0 : 0.0;
    if (rl.next_double() < cfg_.label_noise) y = 1.0 - y;
    b.labels[static_cast<size_t>(i)] = y;
  }
  return b;
}

}  // namespace d2s

#include "gridwit/orbit.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

namespace gridwit {

namespace {

// Iterates c over the integer box prod_k [lo_k, hi_k] in lexicographic order;
// the visitor returns false to abort.
bool box_walk(const std::vector<long>& lo, const std::vector<long>& hi,
              const std::function<bool(const std::vector<long>&)>& visit) {
  int n = static_cast<int>(lo.size());
  std::vector<long> c(lo);
  while (true) {
    if (!visit(c)) return false;
    int k = n - 1;
    while (k >= 0 && c[k] == hi[k]) {
      c[k] = lo[k];
      --k;
    }
    if (k < 0) return true;
    ++c[k];
  }
}

// Multiplication matrix as an integer matrix; throws when the element does
// not act integrally on the power basis.
ZMat integer_mult_matrix(const TotallyRealField& f, const FieldElem& u) {
  QMat m = f.mult_matrix(u);
  int d = f.degree();
  ZMat z(d, ZVec(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (m[i][j].get_den() != 1)
        throw std::runtime_error("element does not act integrally on the order");
      z[i][j] = m[i][j].get_num();
    }
  return z;
}

RVec embedding_balls(const TotallyRealField& f, const FieldElem& u, long prec) {
  RVec e(f.degree());
  for (int i = 0; i < f.degree(); ++i) e[i] = f.embed(u, i, prec);
  return e;
}

RVec log_vector_of(const RVec& embeddings) {
  RVec l(embeddings.size());
  for (size_t i = 0; i < embeddings.size(); ++i) l[i] = embeddings[i].abs().log();
  return l;
}

// Bitmask of embeddings where the element is negative (exact signs).
unsigned long sign_mask(const TotallyRealField& f, const FieldElem& u) {
  unsigned long m = 0;
  for (int i = 0; i < f.degree(); ++i)
    if (f.embedding_sign(u, i) < 0) m |= 1ul << i;
  return m;
}

double sup_norm_mid(const RVec& v) {
  double s = 0;
  for (const Real& x : v) s = std::max(s, std::abs(x.midpoint_double()));
  return s;
}

double dot_mid(const RVec& a, const RVec& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i].midpoint_double() * b[i].midpoint_double();
  return s;
}

struct UnitCand {
  FieldElem elem;
  RVec emb;
  RVec log;
};

// True when appending cand to the selected log vectors increases the rank
// (Gram determinant definitely positive).
bool grows_rank(const std::vector<UnitCand>& sel, const UnitCand& cand) {
  int k = static_cast<int>(sel.size()) + 1;
  RMat gram(k, RVec(k));
  auto row = [&](int i) -> const RVec& { return i + 1 < k ? sel[i].log : cand.log; };
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gram[i][j] = rvec_dot(row(i), row(j));
  Real det = rmat_det(gram);
  long p = det.precision();
  return Real::compare(det, Real::of_long(0, p)) == Order::Greater;
}

// Pairwise size reduction of the log vectors, mirrored exactly on the field
// elements; terminates because the Euclidean norms strictly decrease.
void reduce_pairwise(const TotallyRealField& f, std::vector<UnitCand>& sel, long prec) {
  bool changed = true;
  for (int guard = 0; changed && guard < 200; ++guard) {
    changed = false;
    for (size_t i = 0; i < sel.size(); ++i)
      for (size_t j = 0; j < sel.size(); ++j) {
        if (i == j) continue;
        double den = dot_mid(sel[j].log, sel[j].log);
        if (den <= 0) continue;
        long mu = std::lround(dot_mid(sel[i].log, sel[j].log) / den);
        if (mu == 0) continue;
        UnitCand cand;
        cand.elem = f.mul(sel[i].elem, f.power(sel[j].elem, -mu));
        cand.emb = embedding_balls(f, cand.elem, prec);
        cand.log = log_vector_of(cand.emb);
        if (dot_mid(cand.log, cand.log) < dot_mid(sel[i].log, sel[i].log) - 1e-12) {
          sel[i] = cand;
          changed = true;
        }
      }
  }
}

// |det| of the minor that drops the last coordinate: the lattice determinant
// of rank d-1 log vectors lying in the sum-zero hyperplane.
Real log_minor_det(const std::vector<UnitCand>& sel) {
  int r = static_cast<int>(sel.size());
  RMat m(r, RVec(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) m[i][j] = sel[i].log[j];
  return rmat_det(m).abs();
}

std::vector<long> mod_q_vec(const ZVec& z, long q) {
  std::vector<long> out(z.size());
  for (size_t i = 0; i < z.size(); ++i) {
    mpz_class m = ((z[i] % q) + q) % q;
    out[i] = m.get_si();
  }
  return out;
}

std::vector<long> apply_mod_q(const ZMat& m, const std::vector<long>& s, long q) {
  int d = static_cast<int>(s.size());
  std::vector<long> out(d);
  for (int i = 0; i < d; ++i) {
    mpz_class acc = 0;
    for (int j = 0; j < d; ++j) acc += m[i][j] * s[j];
    acc = ((acc % q) + q) % q;
    out[i] = acc.get_si();
  }
  return out;
}

long exponent_as_long(const mpz_class& e) {
  if (!e.fits_slong_p()) throw std::invalid_argument("exponent out of range");
  return e.get_si();
}

}  // namespace

UnitStabilizer::UnitStabilizer(TotallyRealField field, std::vector<UnitGenerator> gens,
                               bool fundamental_verified)
    : field_(std::move(field)), gens_(std::move(gens)), fundamental_(fundamental_verified) {
  for (const UnitGenerator& g : gens_)
    if (static_cast<int>(g.log_vector.size()) != field_.degree())
      throw std::invalid_argument("generator log vector has wrong dimension");
  log_basis_.reserve(gens_.size());
  for (const UnitGenerator& g : gens_) log_basis_.push_back(g.log_vector);
}

FieldElem UnitStabilizer::unit_elem(const ZVec& exponents) const {
  if (exponents.size() != gens_.size())
    throw std::invalid_argument("exponent vector has wrong length");
  FieldElem u = field_.one();
  for (size_t k = 0; k < gens_.size(); ++k) {
    long e = exponent_as_long(exponents[k]);
    if (e != 0) u = field_.mul(u, field_.power(gens_[k].elem, e));
  }
  return u;
}

ZMat UnitStabilizer::unit_matrix(const ZVec& exponents) const {
  return integer_mult_matrix(field_, unit_elem(exponents));
}

DiagElement UnitStabilizer::diag_image(const ZVec& exponents, long prec) const {
  // Entries as exp of integer combinations of the generator log vectors.
  // Embedding the exact unit element would cancel catastrophically once the
  // exponents grow (the power-basis coordinates dwarf the tiny embeddings).
  if (static_cast<int>(exponents.size()) != rank())
    throw std::invalid_argument("exponent vector has wrong rank");
  int d = field_.degree();
  long p = std::max(prec, gens_.empty() ? prec : gens_[0].log_vector[0].precision());
  RVec entries;
  entries.reserve(d);
  for (int i = 0; i < d; ++i) {
    Real acc = Real::of_long(0, p);
    for (int k = 0; k < rank(); ++k) {
      if (exponents[k] == 0) continue;
      acc = acc + Real::of_mpz(exponents[k], p) * gens_[k].log_vector[i];
    }
    entries.push_back(acc.exp());
  }
  return DiagElement(std::move(entries));
}

Real UnitStabilizer::covering_radius_bound() const {
  long p = log_basis_.empty() ? kDefaultPrecision : log_basis_[0][0].precision();
  Real sum = Real::of_long(0, p);
  for (const RVec& row : log_basis_) sum = sum + rvec_sup_norm(row);
  return sum.mul_2si(-1);
}

CompactPoint build_compact_point(const TotallyRealField& field, long prec) {
  int d = field.degree();
  if (d > 32) throw std::invalid_argument("degree too large");
  long wp = prec + 64;

  // Scaled root-power basis: column j holds theta_i^j / |disc|^(1/(2d)),
  // which has determinant prod_{i<j} (theta_j - theta_i) / sqrt|disc| = 1.
  Real scale = Real::of_mpz(abs(field.discriminant()), wp).root_n(2 * static_cast<unsigned long>(d));
  RMat basis(d, RVec(d));
  for (int i = 0; i < d; ++i) {
    Real root = field.embeddings()[i].approx(wp);
    Real pw = Real::of_long(1, wp);
    for (int j = 0; j < d; ++j) {
      basis[i][j] = pw / scale;
      pw = pw * root;
    }
  }
  Lattice lattice(std::move(basis));

  // Units of the order inside growing coordinate boxes: integral elements of
  // norm +-1, one representative per +-pair, greedily kept while the log
  // vectors gain rank.
  std::vector<UnitCand> selected;
  for (long h : {1L, 2L, 4L, 8L}) {
    std::vector<UnitCand> cands;
    std::set<QVec> seen;
    std::vector<long> lo(d, -h), hi(d, h);
    box_walk(lo, hi, [&](const std::vector<long>& c) {
      FieldElem u(d);
      bool zero = true;
      for (int k = 0; k < d; ++k) {
        u[k] = mpq_class(c[k]);
        if (c[k] != 0) zero = false;
      }
      if (zero) return true;
      mpq_class n = field.norm(u);
      if (n != 1 && n != -1) return true;
      for (int k = 0; k < d; ++k)
        if (u[k] != 0) {
          if (u[k] < 0)
            for (int t = 0; t < d; ++t) u[t] = -u[t];
          break;
        }
      if (u == field.one()) return true;
      if (!seen.insert(u).second) return true;
      UnitCand cand;
      cand.elem = u;
      cand.emb = embedding_balls(field, u, wp);
      cand.log = log_vector_of(cand.emb);
      cands.push_back(std::move(cand));
      return true;
    });
    std::stable_sort(cands.begin(), cands.end(), [](const UnitCand& a, const UnitCand& b) {
      return sup_norm_mid(a.log) < sup_norm_mid(b.log);
    });
    selected.clear();
    for (const UnitCand& cand : cands) {
      if (static_cast<int>(selected.size()) == d - 1) break;
      if (grows_rank(selected, cand)) selected.push_back(cand);
    }
    if (static_cast<int>(selected.size()) == d - 1) break;
  }
  if (static_cast<int>(selected.size()) != d - 1)
    throw std::runtime_error("unit search found no rank d-1 group in the coordinate boxes");

  reduce_pairwise(field, selected, wp);

  // Regulator certificate, cubic case: the smallest regulator of a totally
  // real cubic field is > 0.5251, so a regulator below twice that forces the
  // found group to have index 1 in the full unit group.
  Real regulator = log_minor_det(selected);
  bool fundamental =
      d == 3 && Real::compare(regulator, Real::of_double(1.0502, wp)) == Order::Less;

  // Exact sign characters of the fundamental units; the exponent vectors
  // whose product is totally positive up to sign form the preimage of
  // {0, all-ones} and contain 2 Z^(d-1).
  int r = d - 1;
  const unsigned long all_ones = (1ul << d) - 1;
  std::vector<unsigned long> masks(r);
  for (int k = 0; k < r; ++k) masks[k] = sign_mask(field, selected[k].elem);
  ZMat rows;
  for (int k = 0; k < r; ++k) {
    ZVec row(r, 0);
    row[k] = 2;
    rows.push_back(row);
  }
  for (unsigned long bits = 1; bits < (1ul << r); ++bits) {
    unsigned long m = 0;
    for (int k = 0; k < r; ++k)
      if (bits & (1ul << k)) m ^= masks[k];
    if (m == 0 || m == all_ones) {
      ZVec row(r, 0);
      for (int k = 0; k < r; ++k) row[k] = (bits >> k) & 1;
      rows.push_back(row);
    }
  }
  ZMat hnf = zmat_row_hnf(rows);
  if (static_cast<int>(hnf.size()) != r)
    throw std::runtime_error("sign-character lattice is not full rank");

  std::vector<UnitGenerator> gens;
  for (const ZVec& h : hnf) {
    FieldElem u = field.one();
    for (int k = 0; k < r; ++k) {
      long e = exponent_as_long(h[k]);
      if (e != 0) u = field.mul(u, field.power(selected[k].elem, e));
    }
    unsigned long m = sign_mask(field, u);
    if (m == all_ones) {
      u = field.scale(u, mpq_class(-1));
      m = sign_mask(field, u);
    }
    if (m != 0) throw std::runtime_error("sign-character solve produced a non-positive unit");
    UnitGenerator g;
    g.elem = u;
    g.mult = integer_mult_matrix(field, u);
    mpz_class det = zmat_det(g.mult);
    if (det != 1) throw std::runtime_error("totally positive unit must have determinant 1");
    g.embeddings = embedding_balls(field, u, prec);
    long p0 = g.embeddings[0].precision();
    for (const Real& e : g.embeddings)
      if (Real::compare(e, Real::of_long(0, p0)) != Order::Greater)
        throw std::runtime_error("generator embedding not definitely positive");
    g.log_vector = log_vector_of(g.embeddings);
    gens.push_back(std::move(g));
  }

  return CompactPoint{std::move(lattice),
                      UnitStabilizer(field, std::move(gens), fundamental)};
}

std::vector<QVec> q_rational_points(int d, long q) {
  if (d < 1 || q < 1) throw std::invalid_argument("need d >= 1 and q >= 1");
  std::vector<QVec> out;
  std::vector<long> lo(d, 0), hi(d, q - 1);
  box_walk(lo, hi, [&](const std::vector<long>& z) {
    QVec c(d);
    for (int i = 0; i < d; ++i) {
      mpq_class v(z[i], q);
      v.canonicalize();
      c[i] = v;
    }
    out.push_back(std::move(c));
    return true;
  });
  return out;
}

SubgroupB1 stab_subgroup(const UnitStabilizer& b, const QVec& point_coords, long q) {
  int d = b.dim();
  int r = b.rank();
  if (q < 1) throw std::invalid_argument("q must be >= 1");
  if (static_cast<int>(point_coords.size()) != d)
    throw std::invalid_argument("coordinate vector has wrong dimension");
  ZVec z0(d);
  for (int i = 0; i < d; ++i) {
    mpq_class s = point_coords[i] * q;
    if (s.get_den() != 1)
      throw std::invalid_argument("point is not q-torsion: q * coords not integral");
    z0[i] = s.get_num();
  }

  std::vector<ZMat> fwd(r), bwd(r);
  for (int k = 0; k < r; ++k) {
    fwd[k] = b.generators()[k].mult;
    bwd[k] = zmat_inverse_unimodular(fwd[k]);
  }

  // Breadth-first orbit of the point on (Z/q)^d; exponent labels along a
  // spanning tree turn every non-tree edge into a stabilizer relation.
  std::map<std::vector<long>, ZVec> visited;
  std::queue<std::vector<long>> frontier;
  std::set<ZVec> relations;
  std::vector<long> start = mod_q_vec(z0, q);
  visited.emplace(start, ZVec(r, 0));
  frontier.push(start);
  while (!frontier.empty()) {
    std::vector<long> s = frontier.front();
    frontier.pop();
    ZVec e = visited.at(s);
    for (int k = 0; k < r; ++k)
      for (int dir : {1, -1}) {
        std::vector<long> t = apply_mod_q(dir > 0 ? fwd[k] : bwd[k], s, q);
        ZVec ne = e;
        ne[k] += dir;
        auto it = visited.find(t);
        if (it == visited.end()) {
          visited.emplace(t, ne);
          frontier.push(t);
        } else {
          ZVec rel(r);
          bool nonzero = false;
          for (int j = 0; j < r; ++j) {
            rel[j] = ne[j] - it->second[j];
            if (rel[j] != 0) nonzero = true;
          }
          if (nonzero) {
            for (int j = 0; j < r; ++j)
              if (rel[j] < 0) {
                for (int t2 = 0; t2 < r; ++t2) rel[t2] = -rel[t2];
                break;
              } else if (rel[j] > 0) {
                break;
              }
            relations.insert(rel);
          }
        }
      }
  }

  ZMat rel_rows(relations.begin(), relations.end());
  ZMat hnf = zmat_row_hnf(rel_rows);
  if (static_cast<int>(hnf.size()) != r)
    throw std::runtime_error("stabilizer relations are not full rank");
  mpz_class index = abs(zmat_det(hnf));
  if (index != static_cast<long>(visited.size()))
    throw std::runtime_error("stabilizer index does not match the orbit size");
  mpz_class qd;
  mpz_ui_pow_ui(qd.get_mpz_t(), static_cast<unsigned long>(q), static_cast<unsigned long>(d));
  if (index > qd) throw std::runtime_error("stabilizer index exceeds q^d");
  return SubgroupB1{b, std::move(hnf), index, q};
}

Real SubgroupB1::covering_radius_bound() const {
  int r = parent.rank();
  int d = parent.dim();
  long p = parent.log_basis().empty() ? kDefaultPrecision : parent.log_basis()[0][0].precision();
  Real sum = Real::of_long(0, p);
  for (int k = 0; k < r; ++k) {
    RVec row(d, Real::of_long(0, p));
    for (int j = 0; j < r; ++j) {
      Real c = Real::of_mpz(exponent_lattice[k][j], p);
      row = rvec_add(row, rvec_scale(parent.log_basis()[j], c));
    }
    sum = sum + rvec_sup_norm(row);
  }
  return sum.mul_2si(-1);
}

ApproxResult approximate_in_subgroup(const SubgroupB1& sub, const DiagElement& a) {
  const UnitStabilizer& parent = sub.parent;
  int r = parent.rank();
  int d = parent.dim();
  if (a.dim() != d) throw std::invalid_argument("dimension mismatch");
  long p = a.entries()[0].precision();

  RMat rows(r, RVec(d, Real::of_long(0, p)));
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j) {
      Real c = Real::of_mpz(sub.exponent_lattice[k][j], p);
      rows[k] = rvec_add(rows[k], rvec_scale(parent.log_basis()[j], c));
    }
  RVec target(d);
  for (int i = 0; i < d; ++i) target[i] = a.entries()[i].log();

  CvpResult cvp = cvp_sup(rows, target);
  ZVec exps(r, 0);
  for (int k = 0; k < r; ++k)
    for (int j = 0; j < r; ++j) exps[j] += cvp.coeffs[k] * sub.exponent_lattice[k][j];
  DiagElement best = parent.diag_image(exps, std::max(p, kDefaultPrecision));
  return ApproxResult{std::move(best), std::move(exps), cvp.dist};
}

ApproxResult approximate_in_stabilizer(const UnitStabilizer& b, const DiagElement& a) {
  SubgroupB1 full{b, zmat_identity(b.rank()), 1, 1};
  return approximate_in_subgroup(full, a);
}

DiophantineResult diophantine_test(const RVec& w, const Lattice& x0, const Real& k, const Real& c,
                                   long q_max, long L) {
  int d = x0.dim();
  if (static_cast<int>(w.size()) != d) throw std::invalid_argument("dimension mismatch");
  if (q_max < 2) throw std::invalid_argument("q_max must be >= 2");
  long p = w[0].precision();
  RMat rows = rmat_transpose(x0.basis());
  Real one = Real::of_long(1, p);

  DiophantineResult out;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (long q = 2; q <= q_max; ++q) {
    RVec target = rvec_scale(w, Real::of_long(q, p));
    CvpResult cvp = cvp_sup(rows, target);
    Real threshold = c * ((one - k) * Real::of_long(q, p).log()).exp();
    if (Real::compare(cvp.dist, threshold) == Order::Less) {
      out.case_label = q <= L ? 2 : 3;
      out.q = q;
      out.coeffs = cvp.coeffs;
      out.distance = cvp.dist;
      out.threshold = threshold;
      return out;
    }
    double ratio = cvp.dist.midpoint_double() / threshold.midpoint_double();
    if (ratio < best_ratio) {
      best_ratio = ratio;
      out.q = q;
      out.coeffs = cvp.coeffs;
      out.distance = cvp.dist;
      out.threshold = threshold;
    }
  }
  out.case_label = 1;
  return out;
}

DensityProbeResult fiber_density_probe(const UnitStabilizer& b, const QVec& point_coords,
                                       const Real& norm_bound, int mesh, long cap) {
  int d = b.dim();
  int r = b.rank();
  if (static_cast<int>(point_coords.size()) != d)
    throw std::invalid_argument("coordinate vector has wrong dimension");
  if (mesh < 1) throw std::invalid_argument("mesh must be >= 1");
  long p = b.log_basis()[0][0].precision();
  if (Real::compare(norm_bound, Real::of_long(1, p)) == Order::Less)
    throw std::invalid_argument("norm bound must be >= 1");
  Real log_bound = norm_bound.log();
  double lq = std::max(0.0, log_bound.upper_double());

  // Exponent box from the pseudo-inverse of the log basis: every admissible
  // log vector has all coordinates in [-(d-1) lq, lq].
  std::vector<std::vector<double>> g(r, std::vector<double>(d));
  for (int k = 0; k < r; ++k)
    for (int i = 0; i < d; ++i) g[k][i] = b.log_basis()[k][i].midpoint_double();
  std::vector<std::vector<double>> n(r, std::vector<double>(2 * r, 0.0));
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      for (int t = 0; t < d; ++t) n[i][j] += g[i][t] * g[j][t];
    }
    n[i][r + i] = 1;
  }
  for (int col = 0; col < r; ++col) {
    int piv = col;
    for (int i = col + 1; i < r; ++i)
      if (std::abs(n[i][col]) > std::abs(n[piv][col])) piv = i;
    std::swap(n[piv], n[col]);
    if (n[col][col] == 0) throw std::runtime_error("log basis is numerically singular");
    for (int i = 0; i < r; ++i) {
      if (i == col) continue;
      double f = n[i][col] / n[col][col];
      for (int j = 0; j < 2 * r; ++j) n[i][j] -= f * n[col][j];
    }
  }
  std::vector<long> lo(r), hi(r);
  double box_count = 1;
  for (int k = 0; k < r; ++k) {
    // pinv = G^T (G G^T)^{-1}: entry (t, k) = sum_j g[j][t] * inv[j][k], and
    // |e_k| = |<log vector, pinv column k>| <= (d-1) lq * ||column k||_1.
    double colsum = 0;
    for (int t = 0; t < d; ++t) {
      double v = 0;
      for (int j = 0; j < r; ++j) v += g[j][t] * n[j][r + k] / n[j][j];
      colsum += std::abs(v);
    }
    double bound = (d - 1) * lq * colsum * (1 + 1e-9) + 1e-9;
    hi[k] = static_cast<long>(std::floor(bound));
    lo[k] = -hi[k];
    box_count *= 2.0 * hi[k] + 1.0;
  }
  if (box_count > static_cast<double>(cap)) throw CapExceededError(box_count, cap);

  mpz_class q0 = 1;
  for (int i = 0; i < d; ++i) q0 = lcm(q0, point_coords[i].get_den());
  if (!q0.fits_slong_p()) throw std::invalid_argument("coordinate denominator too large");
  long q0l = q0.get_si();
  ZVec z0(d);
  for (int i = 0; i < d; ++i) {
    mpq_class s = point_coords[i] * q0l;
    z0[i] = s.get_num();
  }

  std::vector<ZMat> fwd(r), bwd(r);
  for (int k = 0; k < r; ++k) {
    fwd[k] = b.generators()[k].mult;
    bwd[k] = zmat_inverse_unimodular(fwd[k]);
  }

  std::set<std::vector<long>> orbit;
  std::vector<long> base = mod_q_vec(z0, q0l);
  box_walk(lo, hi, [&](const std::vector<long>& e) {
    // Admissible iff no log coordinate is definitely above the bound.
    for (int i = 0; i < d; ++i) {
      Real li = Real::of_long(0, p);
      for (int k = 0; k < r; ++k) li = li + Real::of_long(e[k], p) * b.log_basis()[k][i];
      if (Real::compare(li, log_bound) == Order::Greater) return true;
    }
    std::vector<long> v = base;
    for (int k = 0; k < r; ++k) {
      const ZMat& m = e[k] > 0 ? fwd[k] : bwd[k];
      for (long s = 0; s < std::abs(e[k]); ++s) v = apply_mod_q(m, v, q0l);
    }
    orbit.insert(std::move(v));
    return true;
  });

  DensityProbeResult res;
  res.orbit_size = static_cast<long>(orbit.size());
  std::vector<std::vector<double>> pts;
  pts.reserve(orbit.size());
  for (const std::vector<long>& v : orbit) {
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) x[i] = static_cast<double>(v[i]) / static_cast<double>(q0l);
    pts.push_back(std::move(x));
  }
  std::vector<long> glo(d, 0), ghi(d, mesh - 1);
  double worst = 0;
  box_walk(glo, ghi, [&](const std::vector<long>& gidx) {
    double best = std::numeric_limits<double>::infinity();
    for (const std::vector<double>& w : pts) {
      double dist = 0;
      for (int i = 0; i < d; ++i) {
        double t = std::abs((gidx[i] + 0.5) / mesh - w[i]);
        t = std::min(t, 1.0 - t);
        dist = std::max(dist, t);
      }
      best = std::min(best, dist);
    }
    worst = std::max(worst, best);
    return true;
  });
  res.covering_estimate = worst;
  return res;
}

}  // namespace gridwit

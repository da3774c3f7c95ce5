#include "gridwit/rat_poly.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "gridwit/real.hpp"

namespace gridwit {

QPoly qpoly_parse(const std::string& csv) {
  QPoly p;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t a = item.find_first_not_of(" \t");
    size_t b = item.find_last_not_of(" \t");
    if (a == std::string::npos) throw std::invalid_argument("qpoly_parse: empty coefficient");
    p.push_back(parse_rational(item.substr(a, b - a + 1)));
  }
  if (p.empty()) throw std::invalid_argument("qpoly_parse: no coefficients");
  return p;
}

std::string qpoly_format(const QPoly& p) {
  std::string out;
  for (size_t i = 0; i < p.size(); ++i) {
    if (i) out += ",";
    out += p[i].get_str();
  }
  return out;
}

QPoly qpoly_trim(QPoly p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
  return p;
}

int qpoly_degree(const QPoly& p) {
  for (size_t i = p.size(); i > 0; --i)
    if (p[i - 1] != 0) return static_cast<int>(i - 1);
  return -1;
}

mpq_class qpoly_eval(const QPoly& p, const mpq_class& x) {
  mpq_class acc = 0;
  for (size_t i = p.size(); i > 0; --i) acc = acc * x + p[i - 1];
  return acc;
}

QPoly qpoly_derivative(const QPoly& p) {
  QPoly d;
  for (size_t i = 1; i < p.size(); ++i) d.push_back(p[i] * static_cast<long>(i));
  return qpoly_trim(d);
}

QPoly qpoly_add(const QPoly& a, const QPoly& b) {
  QPoly r(std::max(a.size(), b.size()), mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  return qpoly_trim(r);
}

QPoly qpoly_sub(const QPoly& a, const QPoly& b) {
  QPoly r(std::max(a.size(), b.size()), mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return qpoly_trim(r);
}

QPoly qpoly_mul(const QPoly& a, const QPoly& b) {
  if (a.empty() || b.empty()) return {};
  QPoly r(a.size() + b.size() - 1, mpq_class(0));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return qpoly_trim(r);
}

QPoly qpoly_scale(const QPoly& a, const mpq_class& c) {
  QPoly r = a;
  for (auto& x : r) x *= c;
  return qpoly_trim(r);
}

QPoly qpoly_rem(const QPoly& a, const QPoly& b) {
  QPoly r = qpoly_trim(a);
  QPoly d = qpoly_trim(b);
  if (d.empty()) throw std::invalid_argument("qpoly_rem: division by zero polynomial");
  while (qpoly_degree(r) >= qpoly_degree(d)) {
    int dr = qpoly_degree(r);
    int dd = qpoly_degree(d);
    mpq_class c = r[dr] / d[dd];
    for (int i = 0; i <= dd; ++i) r[dr - dd + i] -= c * d[i];
    r = qpoly_trim(r);
    if (r.empty()) break;
  }
  return r;
}

QPoly qpoly_gcd(QPoly a, QPoly b) {
  a = qpoly_trim(a);
  b = qpoly_trim(b);
  while (!b.empty()) {
    QPoly r = qpoly_rem(a, b);
    a = b;
    b = r;
  }
  if (!a.empty()) {
    mpq_class lead = a[qpoly_degree(a)];
    for (auto& c : a) c /= lead;
  }
  return a;
}

bool qpoly_squarefree(const QPoly& p) {
  QPoly g = qpoly_gcd(p, qpoly_derivative(p));
  return qpoly_degree(g) <= 0;
}

mpq_class cauchy_root_bound(const QPoly& p) {
  int n = qpoly_degree(p);
  if (n < 1) throw std::invalid_argument("cauchy_root_bound: degree < 1");
  mpq_class m = 0;
  for (int i = 0; i < n; ++i) {
    mpq_class c = abs(p[i] / p[n]);
    if (c > m) m = c;
  }
  return m + 1;
}

int SturmChain::variations_at(const mpq_class& x) const {
  int count = 0, prev = 0;
  for (const auto& f : seq) {
    int s = sgn(qpoly_eval(f, x));
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++count;
    prev = s;
  }
  return count;
}

int SturmChain::count_roots(const mpq_class& lo, const mpq_class& hi) const {
  return variations_at(lo) - variations_at(hi);
}

SturmChain sturm_chain(const QPoly& p) {
  SturmChain c;
  QPoly f0 = qpoly_trim(p);
  QPoly f1 = qpoly_derivative(f0);
  c.seq.push_back(f0);
  while (!f1.empty()) {
    c.seq.push_back(f1);
    QPoly r = qpoly_rem(f0, f1);
    for (auto& x : r) x = -x;
    f0 = f1;
    f1 = r;
  }
  return c;
}

namespace {

void isolate_rec(const QPoly& p, const SturmChain& chain, const mpq_class& lo,
                 const mpq_class& hi, std::vector<RootInterval>& out, int depth) {
  if (depth > 4096) throw std::runtime_error("isolate_real_roots: subdivision too deep");
  int n = chain.count_roots(lo, hi);
  if (n == 0) return;
  if (n == 1) {
    out.push_back({lo, hi});
    return;
  }
  mpq_class mid = (lo + hi) / 2;
  if (qpoly_eval(p, mid) == 0) {
    // Rational root at mid.  Carve out an interval around it that contains no
    // other root, then recurse on the two sides.
    mpq_class eps = (hi - lo) / 64;
    while (qpoly_eval(p, mid - eps) == 0 || qpoly_eval(p, mid + eps) == 0 ||
           chain.count_roots(mid - eps, mid + eps) != 1) {
      eps /= 2;
      if (eps == 0) throw std::runtime_error("isolate_real_roots: degenerate interval");
    }
    isolate_rec(p, chain, lo, mid - eps, out, depth + 1);
    out.push_back({mid, mid});
    isolate_rec(p, chain, mid + eps, hi, out, depth + 1);
    return;
  }
  isolate_rec(p, chain, lo, mid, out, depth + 1);
  isolate_rec(p, chain, mid, hi, out, depth + 1);
}

}  // namespace

namespace {

// Divisors of |n|, or empty with *ok=false when factoring exceeds the budget.
std::vector<mpz_class> divisors_budgeted(mpz_class n, bool* ok) {
  *ok = true;
  n = abs(n);
  std::vector<mpz_class> divs;
  if (n == 0) return divs;
  std::vector<std::pair<mpz_class, int>> fac;
  mpz_class m = n;
  long budget = 2000000;
  for (mpz_class d = 2; d * d <= m; ++d) {
    if (--budget < 0) {
      *ok = false;
      return {};
    }
    if (m % d == 0) {
      int e = 0;
      while (m % d == 0) {
        m /= d;
        ++e;
      }
      fac.emplace_back(d, e);
    }
  }
  if (m > 1) fac.emplace_back(m, 1);
  divs.push_back(1);
  for (auto& [pz, e] : fac) {
    size_t cur = divs.size();
    mpz_class pw = 1;
    for (int i = 1; i <= e; ++i) {
      pw *= pz;
      for (size_t j = 0; j < cur; ++j) divs.push_back(divs[j] * pw);
    }
    if (divs.size() > 4096) {
      *ok = false;
      return {};
    }
  }
  return divs;
}

// Exact synthetic division of f by (x - r); caller guarantees f(r) == 0.
QPoly deflate(const QPoly& f, const mpq_class& r) {
  int n = qpoly_degree(f);
  QPoly q(n);
  mpq_class carry = f[n];
  for (int i = n - 1; i >= 0; --i) {
    q[i] = carry;
    carry = f[i] + carry * r;
  }
  return q;
}

}  // namespace

std::vector<RootInterval> isolate_real_roots(const QPoly& p) {
  QPoly f = qpoly_trim(p);
  if (qpoly_degree(f) < 1) throw std::invalid_argument("isolate_real_roots: degree < 1");
  if (!qpoly_squarefree(f)) throw std::invalid_argument("isolate_real_roots: polynomial not squarefree");

  // Split off rational roots first so they come back as exact points.
  std::vector<mpq_class> rational_roots;
  if (f[0] == 0) {  // simple root at zero (squarefree)
    rational_roots.emplace_back(0);
    f = deflate(f, 0);
  }
  if (qpoly_degree(f) >= 1) {
    mpz_class den_lcm = 1;
    for (const auto& c : f) {
      mpz_class g = gcd(den_lcm, c.get_den());
      den_lcm = den_lcm / g * c.get_den();
    }
    std::vector<mpz_class> zc;
    for (const auto& c : f) {
      mpq_class s = c * den_lcm;
      s.canonicalize();
      zc.push_back(s.get_num());
    }
    bool ok1 = false, ok2 = false;
    auto nums = divisors_budgeted(zc.front(), &ok1);
    auto dens = divisors_budgeted(zc.back(), &ok2);
    if (ok1 && ok2) {
      std::vector<mpq_class> cands;
      for (const auto& a : nums)
        for (const auto& b : dens) {
          mpq_class r(a, b);
          r.canonicalize();
          cands.push_back(r);
          cands.push_back(-r);
        }
      std::sort(cands.begin(), cands.end());
      cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
      for (const auto& r : cands)
        if (qpoly_degree(f) >= 1 && qpoly_eval(f, r) == 0) {
          rational_roots.push_back(r);
          f = qpoly_trim(deflate(f, r));
        }
    }
  }

  std::vector<RootInterval> out;
  for (const auto& r : rational_roots) out.push_back({r, r});
  if (qpoly_degree(f) >= 1) {
    mpq_class b = cauchy_root_bound(f);
    SturmChain chain = sturm_chain(f);
    std::vector<RootInterval> rest;
    isolate_rec(f, chain, -b, b, rest, 0);
    // Shrink each interval until it excludes every split-off rational point,
    // so the merged list is totally ordered.
    for (auto& iv : rest) {
      for (const auto& r : rational_roots) {
        while (!iv.is_point() && iv.lo < r && r < iv.hi) {
          iv = refine_root(f, iv, (iv.hi - iv.lo) / 4);
        }
      }
      out.push_back(iv);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const RootInterval& a, const RootInterval& b) { return a.lo < b.lo || (a.lo == b.lo && a.hi < b.hi); });
  return out;
}

RootInterval refine_root(const QPoly& p, RootInterval r, const mpq_class& eps) {
  if (r.is_point()) return r;
  int slo = sgn(qpoly_eval(p, r.lo));
  while (r.hi - r.lo > eps) {
    mpq_class mid = (r.lo + r.hi) / 2;
    int sm = sgn(qpoly_eval(p, mid));
    if (sm == 0) {
      r.lo = r.hi = mid;
      return r;
    }
    if (sm == slo) {
      r.lo = mid;
    } else {
      r.hi = mid;
    }
  }
  return r;
}

}  // namespace gridwit

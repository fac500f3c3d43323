#include "divflow/chains.hpp"

#include "divflow/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace divflow {

namespace {

double factorial(int k) { return std::tgamma(k + 1.0); }

bool same_letters(const std::vector<ParamSymbol>& a, const std::vector<ParamSymbol>& b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].id() != b[i].id()) return false;
    return true;
}

// (g^{-1} (x) g)^{(x) reps} appended to w
void append_pairs(std::vector<ParamSymbol>& w, const ParamSymbol& ginv, const ParamSymbol& g, int reps)
{
    for (int r = 0; r < reps; ++r) {
        w.push_back(ginv);
        w.push_back(g);
    }
}

void check_idempotent(const ParamSymbol& e)
{
    if (!e.has_values()) return;
    const double radii[] = {0.0, 0.5, 2.0};
    for (double r : radii) {
        for (const RealVec& w : sphere_samples(e.p())) {
            const Matrix v = e.eval(r * w);
            const double res = (v * v - v).norm();
            if (res > 1e-9 * (1.0 + v.norm())) {
                throw PreconditionError("ch_even: symbol is not idempotent (|e^2 - e| = " + std::to_string(res) +
                                        " at |mu| = " + std::to_string(r) + ")");
            }
        }
    }
}

} // namespace

std::vector<std::pair<double, double>> path_rule(const SymbolPath& path, int n_s)
{
    if (n_s < 8 || n_s % 8 != 0)
        throw PreconditionError("path_rule: n_s must be a positive multiple of 8, got " + std::to_string(n_s));
    std::vector<double> knots{0.0};
    for (double b : path.breakpoints)
        if (b > 0.0 && b < 1.0) knots.push_back(b);
    knots.push_back(1.0);
    std::sort(knots.begin(), knots.end());
    std::vector<std::pair<double, double>> rule;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (knots[i + 1] - knots[i] <= 0.0) continue;
        const auto seg = composite_gauss(knots[i], knots[i + 1], n_s);
        rule.insert(rule.end(), seg.begin(), seg.end());
    }
    return rule;
}

void TensorChain::add_word(cplx coef, std::vector<ParamSymbol> letters)
{
    if (coef == 0.0) return;
    if (letters.empty()) throw PreconditionError("TensorChain: empty word");
    for (const ParamSymbol& a : letters) {
        if (a.p() != p_ || a.N() != n_) {
            throw PreconditionError("TensorChain: letter has (p, N) = (" + std::to_string(a.p()) + ", " +
                                    std::to_string(a.N()) + "), chain has (" + std::to_string(p_) + ", " +
                                    std::to_string(n_) + ")");
        }
    }
    auto& comp = components_[static_cast<int>(letters.size()) - 1];
    for (ChainWord& w : comp) {
        if (same_letters(w.letters, letters)) {
            w.coef += coef;
            return;
        }
    }
    comp.push_back({coef, std::move(letters)});
}

TensorChain& TensorChain::add(const TensorChain& other, cplx coef)
{
    if (other.p_ != p_ || other.n_ != n_) {
        if (other.empty()) return *this;
        throw PreconditionError("TensorChain: adding chains with different (p, N)");
    }
    for (const auto& [deg, words] : other.components_)
        for (const ChainWord& w : words) add_word(coef * w.coef, w.letters);
    return *this;
}

const std::vector<ChainWord>& TensorChain::component(int degree) const
{
    static const std::vector<ChainWord> none;
    auto it = components_.find(degree);
    return it == components_.end() ? none : it->second;
}

std::vector<int> TensorChain::degrees() const
{
    std::vector<int> out;
    for (const auto& [deg, words] : components_)
        if (!words.empty()) out.push_back(deg);
    return out;
}

bool TensorChain::empty() const
{
    for (const auto& [deg, words] : components_)
        for (const ChainWord& w : words)
            if (w.coef != 0.0) return false;
    return true;
}

std::size_t TensorChain::word_count() const
{
    std::size_t n = 0;
    for (const auto& [deg, words] : components_) n += words.size();
    return n;
}

TensorChain chain_scale(cplx c, const TensorChain& a)
{
    TensorChain out(a.p(), a.N());
    return out.add(a, c);
}

TensorChain chain_add(const TensorChain& a, const TensorChain& b, cplx cb)
{
    TensorChain out = a;
    return out.add(b, cb);
}

TensorChain chain_truncate(const TensorChain& a, int max_degree)
{
    TensorChain out(a.p(), a.N());
    for (int d : a.degrees())
        if (d <= max_degree)
            for (const ChainWord& w : a.component(d)) out.add_word(w.coef, w.letters);
    return out;
}

TensorChain b_chain(const TensorChain& c)
{
    TensorChain out(c.p(), c.N());
    for (int n : c.degrees()) {
        if (n == 0) continue;
        for (const ChainWord& w : c.component(n)) {
            const auto& a = w.letters;
            for (int j = 0; j < n; ++j) {
                std::vector<ParamSymbol> v;
                v.reserve(n);
                for (int i = 0; i < j; ++i) v.push_back(a[i]);
                v.push_back(sym_mul(a[j], a[j + 1]));
                for (int i = j + 2; i <= n; ++i) v.push_back(a[i]);
                out.add_word((j % 2 ? -1.0 : 1.0) * w.coef, std::move(v));
            }
            std::vector<ParamSymbol> v{sym_mul(a[n], a[0])};
            for (int i = 1; i < n; ++i) v.push_back(a[i]);
            out.add_word((n % 2 ? -1.0 : 1.0) * w.coef, std::move(v));
        }
    }
    return out;
}

TensorChain B_chain(const TensorChain& c)
{
    TensorChain out(c.p(), c.N());
    if (c.empty()) return out;
    const ParamSymbol one = identity_symbol(c.p(), c.N());
    for (int n : c.degrees()) {
        for (const ChainWord& w : c.component(n)) {
            const auto& a = w.letters;
            for (int j = 0; j <= n; ++j) {
                const double sign = (n * j) % 2 ? -1.0 : 1.0;
                // 1 (x) a_j .. a_n a_0 .. a_{j-1}
                std::vector<ParamSymbol> v{one};
                for (int i = j; i <= n; ++i) v.push_back(a[i]);
                for (int i = 0; i < j; ++i) v.push_back(a[i]);
                out.add_word(sign * w.coef, v);
                // a_j (x) 1 (x) a_{j+1} .. a_n a_0 .. a_{j-1}; degenerate, sign from (1 - t) s N
                std::vector<ParamSymbol> u{a[j], one};
                for (int i = j + 1; i <= n; ++i) u.push_back(a[i]);
                for (int i = 0; i < j; ++i) u.push_back(a[i]);
                out.add_word(sign * w.coef, std::move(u));
            }
        }
    }
    return out;
}

TensorChain ch_odd(const ParamSymbol& g, int K)
{
    if (K < 0) throw PreconditionError("ch_odd: negative truncation degree");
    const ParamSymbol ginv = sym_inv(g);
    TensorChain out(g.p(), g.N());
    for (int k = 0; k <= K; ++k) {
        std::vector<ParamSymbol> w;
        append_pairs(w, ginv, g, k + 1);
        out.add_word((k % 2 ? -1.0 : 1.0) * factorial(k), std::move(w));
    }
    return out;
}

TensorChain ch_sec_odd(const ParamSymbol& g, const ParamSymbol& h, int K)
{
    if (K < 0) throw PreconditionError("ch_sec_odd: negative truncation degree");
    TensorChain out(g.p(), g.N());
    if (h.is_zero()) return out;
    const ParamSymbol ginv = sym_inv(g);
    const ParamSymbol gh = sym_mul(ginv, h);
    out.add_word(1.0, {gh});
    for (int k = 0; k <= K; ++k) {
        const double c = (k % 2 ? 1.0 : -1.0) * factorial(k);
        for (int j = 0; j <= k; ++j) {
            std::vector<ParamSymbol> w;
            append_pairs(w, ginv, g, j + 1);
            w.push_back(gh);
            append_pairs(w, ginv, g, k - j);
            out.add_word(c, std::move(w));
        }
    }
    return out;
}

TensorChain ch_sec2_odd(const ParamSymbol& g, const ParamSymbol& h1, const ParamSymbol& h2, int K)
{
    if (K < 0) throw PreconditionError("ch_sec2_odd: negative truncation degree");
    TensorChain out(g.p(), g.N());
    const ParamSymbol ginv = sym_inv(g);
    const ParamSymbol x1 = sym_mul(ginv, h1);
    const ParamSymbol x2 = sym_mul(ginv, h2);
    out.add_word(-1.0, {x1, x2});
    // The triple sums enter with sign +(-1)^k k! for h1 before h2; this is the
    // sign for which the secondary transgression holds with the b and B above.
    for (int k = 0; k <= K; ++k) {
        const double c = (k % 2 ? -1.0 : 1.0) * factorial(k);
        for (int j1 = 0; j1 <= k; ++j1) {
            for (int j2 = 0; j1 + j2 <= k; ++j2) {
                const int j3 = k - j1 - j2;
                for (int swap = 0; swap < 2; ++swap) {
                    std::vector<ParamSymbol> w;
                    append_pairs(w, ginv, g, j1 + 1);
                    w.push_back(swap ? x2 : x1);
                    append_pairs(w, ginv, g, j2);
                    w.push_back(swap ? x1 : x2);
                    append_pairs(w, ginv, g, j3);
                    out.add_word(swap ? -c : c, std::move(w));
                }
            }
        }
    }
    return out;
}

TensorChain ch_even(const ParamSymbol& e, int K)
{
    if (K < 0) throw PreconditionError("ch_even: negative truncation degree");
    check_idempotent(e);
    TensorChain out(e.p(), e.N());
    out.add_word(1.0, {e});
    if (K == 0) return out;
    const ParamSymbol shifted = sym_sub(e, sym_scale(0.5, identity_symbol(e.p(), e.N())));
    for (int k = 1; k <= K; ++k) {
        std::vector<ParamSymbol> w{shifted};
        for (int i = 0; i < 2 * k; ++i) w.push_back(e);
        out.add_word((k % 2 ? -1.0 : 1.0) * factorial(2 * k) / factorial(k), std::move(w));
    }
    return out;
}

TensorChain iota(const ParamSymbol& h, const TensorChain& c)
{
    TensorChain out(c.p(), c.N());
    for (int n : c.degrees()) {
        for (const ChainWord& w : c.component(n)) {
            for (int i = 0; i <= n; ++i) {
                std::vector<ParamSymbol> v(w.letters.begin(), w.letters.begin() + i + 1);
                v.push_back(h);
                v.insert(v.end(), w.letters.begin() + i + 1, w.letters.end());
                out.add_word((i % 2 ? -1.0 : 1.0) * w.coef, std::move(v));
            }
        }
    }
    return out;
}

TensorChain ch_sec_even(const ParamSymbol& e, const ParamSymbol& h, int K) { return iota(h, ch_even(e, K)); }

SymbolPath make_path(int p, int n, std::function<ParamSymbol(double)> family,
                     std::function<ParamSymbol(double)> derivative, std::vector<double> breakpoints)
{
    if (!family) throw PreconditionError("make_path: empty family");
    SymbolPath path;
    path.p = p;
    path.N = n;
    path.breakpoints = std::move(breakpoints);
    if (!derivative) {
        // Stencils stay inside the smooth piece containing s.
        std::vector<double> knots{0.0, 1.0};
        for (double b : path.breakpoints)
            if (b > 0.0 && b < 1.0) knots.push_back(b);
        std::sort(knots.begin(), knots.end());
        derivative = [family, knots](double s) {
            auto hi = std::upper_bound(knots.begin(), knots.end(), s);
            if (hi == knots.end()) --hi;
            const double b = *hi, a = hi == knots.begin() ? b : *(hi - 1);
            const double h = std::min(1e-3, (b - a) / 8.0);
            std::vector<std::pair<cplx, ParamSymbol>> parts;
            if (s - a < 2 * h) {
                const double c[] = {-25.0, 48.0, -36.0, 16.0, -3.0};
                for (int i = 0; i < 5; ++i) parts.emplace_back(c[i] / (12 * h), family(s + i * h));
            } else if (b - s < 2 * h) {
                const double c[] = {25.0, -48.0, 36.0, -16.0, 3.0};
                for (int i = 0; i < 5; ++i) parts.emplace_back(c[i] / (12 * h), family(s - i * h));
            } else {
                const double c[] = {1.0, -8.0, 8.0, -1.0};
                const double o[] = {-2.0, -1.0, 1.0, 2.0};
                for (int i = 0; i < 4; ++i) parts.emplace_back(c[i] / (12 * h), family(s + o[i] * h));
            }
            return sym_lincomb(parts);
        };
    }
    path.family = std::move(family);
    path.derivative = std::move(derivative);
    return path;
}

void check_admissible(const SymbolPath& path, bool endpoints_invertible)
{
    if (endpoints_invertible) {
        for (double s : {0.0, 1.0}) {
            try {
                sym_inv(path.at(s));
            } catch (const PreconditionError& e) {
                throw PreconditionError("path endpoint s = " + std::to_string(s) + " is not invertible: " + e.what());
            }
        }
    }
    const int samples = 16;
    for (int i = 0; i <= samples; ++i) {
        const double s = static_cast<double>(i) / samples;
        try {
            sym_inv(symbol_class(path.at(s)));
        } catch (const PreconditionError& e) {
            throw PreconditionError("path is not elliptic at s = " + std::to_string(s) + ": " + e.what());
        }
    }
}

RelativeChain relative_ch_path(const SymbolPath& path, int K, int n_s)
{
    check_admissible(path);
    RelativeChain out{TensorChain(path.p, path.N), TensorChain(path.p, path.N)};
    out.bulk.add(ch_odd(path.at(1.0), K));
    out.bulk.add(ch_odd(path.at(0.0), K), -1.0);
    for (const auto& [s, w] : path_rule(path, n_s)) {
        const ParamSymbol dot = path.dot(s);
        if (symbol_class(dot).expansion().terms.empty()) continue;
        out.boundary.add(ch_sec_odd(symbol_class(path.at(s)), symbol_class(dot), K), -w);
    }
    return out;
}

RelativeChain relative_ch_path_even(const SymbolPath& path, int K, int n_s)
{
    const int samples = 16;
    for (int i = 0; i <= samples; ++i) {
        const double s = static_cast<double>(i) / samples;
        const ParamSymbol f = symbol_class(path.at(s));
        const Expansion e = sym_sub(sym_mul(f, f), f).expansion(-path.p - 1.5);
        for (const HomogTerm& t : e.terms) {
            for (const RealVec& w : sphere_samples(path.p)) {
                if (t.eval(w).norm() > 1e-8) {
                    throw PreconditionError("path leading part is not idempotent at s = " + std::to_string(s));
                }
            }
        }
    }
    RelativeChain out{TensorChain(path.p, path.N), TensorChain(path.p, path.N)};
    out.bulk.add(ch_even(path.at(1.0), K));
    out.bulk.add(ch_even(path.at(0.0), K), -1.0);
    const ParamSymbol one = identity_symbol(path.p, path.N);
    for (const auto& [s, w] : path_rule(path, n_s)) {
        const ParamSymbol f = symbol_class(path.at(s));
        const ParamSymbol dot = symbol_class(path.dot(s));
        if (dot.expansion().terms.empty()) continue;
        const ParamSymbol h = sym_mul(sym_sub(sym_scale(2.0, f), one), dot);
        out.boundary.add(ch_sec_even(f, h, K), -w);
    }
    return out;
}

Cochain character_cochain(int p, const QuadConfig& cfg, FormalTraceMethod method)
{
    Cochain c;
    c.degree = p;
    c.bulk = [cfg](const std::vector<ParamSymbol>& w) { return character_phi(w, cfg); };
    c.boundary = [cfg, method](const std::vector<ParamSymbol>& w) { return character_psi(w, cfg, method); };
    return c;
}

cplx pair(const Cochain& phi, const TensorChain& c)
{
    cplx total = 0.0;
    for (const ChainWord& w : c.component(phi.degree))
        if (w.coef != 0.0) total += w.coef * phi.bulk(w.letters);
    return total;
}

cplx pair(const Cochain& phi, const RelativeChain& c)
{
    cplx total = pair(phi, c.bulk);
    if (phi.boundary && phi.degree >= 1)
        for (const ChainWord& w : c.boundary.component(phi.degree - 1))
            if (w.coef != 0.0) total += w.coef * phi.boundary(w.letters);
    return total;
}

} // namespace divflow

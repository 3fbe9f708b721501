/// @file  core.hpp
/// @brief Comparison constraints, Gram matrices, margins and the linear
///        operator that maps a Gram matrix to its constraint margins.

#pragma once

#include <ordmargin/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ordmargin {

using Index = Eigen::Index;

/// Symmetric n x n matrix of inner products, G = X^T X.
using GramMatrix = Eigen::MatrixXd;

/// Number of items together with the target embedding dimension.
struct ItemCount {
    int n = 0;
    int p = 0;

    /// Validates n >= 4 and 1 <= p <= n - 2.
    static ItemCount make(int n, int p) {
        if (n < 4)
            throw ConfigError("item count must be at least 4, got " + std::to_string(n));
        if (p < 1 || p > n - 2)
            throw ConfigError("embedding dimension must lie in [1, n-2], got p=" +
                              std::to_string(p) + " for n=" + std::to_string(n));
        return ItemCount{n, p};
    }
};

/// Ordinal constraint comparing pair (i,j) against pair (l,k).
struct Quadruplet {
    int i = 0, j = 0, l = 0, k = 0;

    friend bool operator==(const Quadruplet&, const Quadruplet&) = default;
};

/// Triplet (i; j vs k), identical to the quadruplet (i, j, i, k).
struct Triplet {
    int i = 0, j = 0, k = 0;

    Quadruplet quadruplet() const { return {i, j, i, k}; }
    friend bool operator==(const Triplet&, const Triplet&) = default;
};

enum class ConstraintKind { Triplet, Quadruplet };

namespace detail {

inline bool samePair(int a, int b, int c, int d) {
    return (a == c && b == d) || (a == d && b == c);
}

inline void checkIndex(int idx, int n) {
    if (idx < 0 || idx >= n)
        throw DataError("item index " + std::to_string(idx) + " out of range [0, " +
                        std::to_string(n) + ")");
}

} // namespace detail

/// Throws DataError unless q references valid, non-degenerate pairs.
inline void validate(const Quadruplet& q, int n) {
    for (int idx : {q.i, q.j, q.l, q.k})
        detail::checkIndex(idx, n);
    if (q.i == q.j || q.l == q.k)
        throw DataError("quadruplet pairs must join distinct items");
    if (detail::samePair(q.i, q.j, q.l, q.k))
        throw DataError("quadruplet compares a pair with itself");
}

inline void validate(const Triplet& t, int n) {
    for (int idx : {t.i, t.j, t.k})
        detail::checkIndex(idx, n);
    if (t.i == t.j || t.i == t.k || t.j == t.k)
        throw DataError("triplet indices must be pairwise distinct");
}

/// A labelled, homogeneous list of ordinal constraints over n items.
///
/// Orientation: label +1 states that the (i,j) pair is the more similar one,
/// so the constraint is satisfied when d2(i,j) < d2(l,k). Label -1 states the
/// opposite. Duplicates are allowed and counted with multiplicity.
class ComparisonSet {
public:
    ComparisonSet() = default;

    static ComparisonSet fromTriplets(int n, const std::vector<Triplet>& triplets,
                                      std::vector<int> labels) {
        if (n < 3)
            throw DataError("a triplet set needs at least 3 items");
        std::vector<Quadruplet> quads;
        quads.reserve(triplets.size());
        for (const auto& t : triplets) {
            validate(t, n);
            quads.push_back(t.quadruplet());
        }
        return ComparisonSet(n, ConstraintKind::Triplet, std::move(quads), std::move(labels));
    }

    /// Every label is +1 (canonical orientation).
    static ComparisonSet fromTriplets(int n, const std::vector<Triplet>& triplets) {
        return fromTriplets(n, triplets, std::vector<int>(triplets.size(), 1));
    }

    static ComparisonSet fromQuadruplets(int n, std::vector<Quadruplet> quads,
                                         std::vector<int> labels) {
        if (n < 4)
            throw DataError("a quadruplet set needs at least 4 items");
        for (const auto& q : quads)
            validate(q, n);
        return ComparisonSet(n, ConstraintKind::Quadruplet, std::move(quads), std::move(labels));
    }

    int items() const { return n_; }
    std::size_t size() const { return quads_.size(); }
    bool empty() const { return quads_.empty(); }
    ConstraintKind kind() const { return kind_; }

    const Quadruplet& operator[](std::size_t q) const { return quads_[q]; }
    int label(std::size_t q) const { return labels_[q]; }
    std::span<const Quadruplet> constraints() const { return quads_; }
    std::span<const int> labels() const { return labels_; }

    Triplet triplet(std::size_t q) const {
        const auto& c = quads_[q];
        return {c.i, c.j, c.k};
    }

    /// Constraints at the given positions, in the given order.
    ComparisonSet subset(std::span<const std::size_t> positions) const {
        ComparisonSet out;
        out.n_ = n_;
        out.kind_ = kind_;
        out.quads_.reserve(positions.size());
        out.labels_.reserve(positions.size());
        for (std::size_t pos : positions) {
            out.quads_.push_back(quads_.at(pos));
            out.labels_.push_back(labels_.at(pos));
        }
        return out;
    }

    /// Same constraints with the two pairs swapped and every label negated.
    ComparisonSet flipped() const {
        ComparisonSet out = *this;
        for (std::size_t q = 0; q < out.quads_.size(); ++q) {
            auto& c = out.quads_[q];
            std::swap(c.i, c.l);
            std::swap(c.j, c.k);
            out.labels_[q] = -out.labels_[q];
        }
        return out;
    }

    /// Concatenation; both sets must share item count and kind.
    ComparisonSet concat(const ComparisonSet& other) const {
        if (other.n_ != n_ || other.kind_ != kind_)
            throw DataError("cannot concatenate incompatible comparison sets");
        ComparisonSet out = *this;
        out.quads_.insert(out.quads_.end(), other.quads_.begin(), other.quads_.end());
        out.labels_.insert(out.labels_.end(), other.labels_.begin(), other.labels_.end());
        return out;
    }

private:
    ComparisonSet(int n, ConstraintKind kind, std::vector<Quadruplet> quads,
                  std::vector<int> labels)
        : n_(n), kind_(kind), quads_(std::move(quads)), labels_(std::move(labels)) {
        if (labels_.size() != quads_.size())
            throw DataError("label count does not match constraint count");
        for (int y : labels_)
            if (y != 1 && y != -1)
                throw DataError("labels must be +1 or -1, got " + std::to_string(y));
    }

    int n_ = 0;
    ConstraintKind kind_ = ConstraintKind::Triplet;
    std::vector<Quadruplet> quads_;
    std::vector<int> labels_;
};

/// One nonzero of the matrix form K_q.
struct OperatorEntry {
    int row = 0;
    int col = 0;
    double coef = 0.0;

    friend bool operator==(const OperatorEntry&, const OperatorEntry&) = default;
};

/// Sparse entries of K_q, with <K_q, G> = d2(i,j) - d2(l,k).
/// Coefficients at coincident indices are accumulated and zeros dropped;
/// entries are sorted by (row, col).
inline std::vector<OperatorEntry> makeOperatorRow(const Quadruplet& q, int n) {
    validate(q, n);
    std::map<std::pair<int, int>, double> acc;
    auto add = [&](int r, int c, double v) { acc[{r, c}] += v; };
    add(q.i, q.i, 1.0);
    add(q.i, q.j, -1.0);
    add(q.j, q.i, -1.0);
    add(q.j, q.j, 1.0);
    add(q.l, q.l, -1.0);
    add(q.l, q.k, 1.0);
    add(q.k, q.l, 1.0);
    add(q.k, q.k, -1.0);
    std::vector<OperatorEntry> row;
    for (const auto& [rc, v] : acc)
        if (v != 0.0)
            row.push_back({rc.first, rc.second, v});
    return row;
}

inline std::vector<OperatorEntry> makeOperatorRow(const Triplet& t, int n) {
    validate(t, n);
    return makeOperatorRow(t.quadruplet(), n);
}

/// The stacked operator whose q-th row is vec(K_q)^T. Stored sparsely
/// (at most 8 nonzeros per row after accumulation) and never densified.
class DesignOperator {
public:
    DesignOperator() = default;

    explicit DesignOperator(const ComparisonSet& set) : n_(set.items()) {
        offsets_.reserve(set.size() + 1);
        for (const auto& q : set.constraints()) {
            for (const auto& e : makeOperatorRow(q, n_)) {
                linear_.push_back(static_cast<Index>(e.col) * n_ + e.row);
                coef_.push_back(e.coef);
            }
            offsets_.push_back(linear_.size());
        }
    }

    int items() const { return n_; }
    Index rows() const { return static_cast<Index>(offsets_.size()) - 1; }
    Index cols() const { return static_cast<Index>(n_) * n_; }

    /// <K_q, G> for a column-major n x n matrix given as a flat vector.
    double applyRow(Index q, const double* g) const {
        double s = 0.0;
        for (std::size_t a = offsets_[q]; a < offsets_[q + 1]; ++a)
            s += coef_[a] * g[linear_[a]];
        return s;
    }

    /// out[q] = <K_q, G>.
    void apply(const double* g, double* out) const {
        for (Index q = 0; q < rows(); ++q)
            out[q] = applyRow(q, g);
    }

    Eigen::VectorXd apply(const GramMatrix& G) const {
        checkShape(G);
        Eigen::VectorXd out(rows());
        apply(G.data(), out.data());
        return out;
    }

    /// out += sum_q v[q] K_q (vectorised, column-major).
    void applyTransposeAdd(const double* v, double* out) const {
        for (Index q = 0; q < rows(); ++q) {
            const double vq = v[q];
            if (vq == 0.0)
                continue;
            for (std::size_t a = offsets_[q]; a < offsets_[q + 1]; ++a)
                out[linear_[a]] += coef_[a] * vq;
        }
    }

    Eigen::MatrixXd applyTranspose(const Eigen::VectorXd& v) const {
        if (v.size() != rows())
            throw DataError("operator transpose: vector length mismatch");
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n_, n_);
        applyTransposeAdd(v.data(), out.data());
        return out;
    }

    /// Entries of row q as (row, col, coef).
    std::vector<OperatorEntry> row(Index q) const {
        std::vector<OperatorEntry> out;
        for (std::size_t a = offsets_[q]; a < offsets_[q + 1]; ++a)
            out.push_back({static_cast<int>(linear_[a] % n_),
                           static_cast<int>(linear_[a] / n_), coef_[a]});
        return out;
    }

private:
    void checkShape(const GramMatrix& G) const {
        if (G.rows() != n_ || G.cols() != n_)
            throw DataError("Gram matrix shape does not match operator item count");
    }

    int n_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Index> linear_;
    std::vector<double> coef_;
};

/// <K_q, G> = d2(i,j) - d2(l,k) expressed through the entries of G.
inline double deltaG(const Quadruplet& q, const GramMatrix& G) {
    return G(q.i, q.i) - G(q.i, q.j) - G(q.j, q.i) + G(q.j, q.j) - G(q.l, q.l) +
           G(q.l, q.k) + G(q.k, q.l) - G(q.k, q.k);
}

inline double deltaG(const Triplet& t, const GramMatrix& G) {
    return deltaG(t.quadruplet(), G);
}

/// Signed margin y * (d2(l,k) - d2(i,j)); positive iff the constraint holds.
inline double margin(const Quadruplet& q, int y, const GramMatrix& G) {
    return -static_cast<double>(y) * deltaG(q, G);
}

/// Margins of every constraint in the set.
inline Eigen::VectorXd margins(const ComparisonSet& set, const GramMatrix& G) {
    if (G.rows() != set.items() || G.cols() != set.items())
        throw DataError("Gram matrix shape does not match item count");
    Eigen::VectorXd out(static_cast<Index>(set.size()));
    for (std::size_t q = 0; q < set.size(); ++q)
        out[static_cast<Index>(q)] = margin(set[q], set.label(q), G);
    return out;
}

/// Squared distance matrix D = diag(G) 1^T - 2 G + 1 diag(G)^T.
inline Eigen::MatrixXd squaredDistances(const GramMatrix& G) {
    const Eigen::VectorXd d = G.diagonal();
    const Index n = G.rows();
    return d.replicate(1, n) + d.transpose().replicate(n, 1) - G - G.transpose();
}

struct HistogramBin {
    double lower = 0.0;
    std::size_t count = 0;
};

/// First and second moments of a margin sample plus a fixed-width histogram.
struct MarginStats {
    double mean = 0.0;
    double variance = 0.0; ///< population form, 1/|Q|
    double binWidth = 0.0;
    std::vector<HistogramBin> histogram;

    /// sqrt(variance) / mean; infinite when the mean is not positive.
    double coefficientOfVariation() const {
        if (!(mean > 0.0))
            return std::numeric_limits<double>::infinity();
        return std::sqrt(variance) / mean;
    }
};

inline MarginStats marginStats(std::span<const double> values, double binWidth) {
    if (values.empty())
        throw DataError("margin statistics need at least one constraint");
    if (!(binWidth > 0.0))
        throw ConfigError("histogram bin width must be positive");
    MarginStats s;
    s.binWidth = binWidth;
    const double count = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / count;
    double ss = 0.0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / count;

    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const auto bins = static_cast<std::size_t>(std::floor((*hi - *lo) / binWidth)) + 1;
    s.histogram.resize(bins);
    for (std::size_t b = 0; b < bins; ++b)
        s.histogram[b].lower = *lo + static_cast<double>(b) * binWidth;
    for (double v : values) {
        auto b = static_cast<std::size_t>(std::floor((v - *lo) / binWidth));
        s.histogram[std::min(b, bins - 1)].count += 1;
    }
    return s;
}

inline MarginStats marginStats(const ComparisonSet& set, const GramMatrix& G, double binWidth) {
    const Eigen::VectorXd m = margins(set, G);
    return marginStats(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())),
                       binWidth);
}

/// Fraction of constraints whose margin is not strictly positive.
inline double generalizationError(const ComparisonSet& test, const GramMatrix& G) {
    if (test.empty())
        throw DataError("generalization error of an empty constraint set");
    const Eigen::VectorXd m = margins(test, G);
    const auto wrong = (m.array() <= 0.0).count();
    return static_cast<double>(wrong) / static_cast<double>(test.size());
}

/// Rank-p factor X (p x n) with X^T X the best PSD rank-p approximation of G.
/// Rows are ordered by decreasing eigenvalue; negative eigenvalues clamp to 0.
inline Eigen::MatrixXd gramToEmbedding(const GramMatrix& G, int p) {
    if (G.rows() != G.cols())
        throw DataError("Gram matrix must be square");
    if (p < 1 || p > G.rows())
        throw ConfigError("embedding dimension out of range");
    const Eigen::MatrixXd sym = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        throw SolverError("eigendecomposition failed in gramToEmbedding");
    const Index n = G.rows();
    Eigen::MatrixXd X(p, n);
    for (int r = 0; r < p; ++r) {
        const Index c = n - 1 - r;
        const double lambda = std::max(eig.eigenvalues()[c], 0.0);
        X.row(r) = std::sqrt(lambda) * eig.eigenvectors().col(c).transpose();
    }
    return X;
}

} // namespace ordmargin

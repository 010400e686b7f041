#pragma once

// Scanning positional encoding: 3D rotary embeddings whose spatial axes follow
// the global scan anchor of each block, plus a single attention layer that
// consumes them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/matrix.hpp"

namespace scrollscape {

enum class Axis { t = 0, h = 1, w = 2 };

struct RopeParams {
    double base = 10000.0;
    std::size_t head_dim = 96;
    std::array<std::size_t, 3> axis_split{32, 32, 32};  // dims for (t, h, w)

    std::size_t axis_dim(Axis a) const { return axis_split[static_cast<std::size_t>(a)]; }

    void validate() const {
        if (!(base > 0.0) || !std::isfinite(base)) throw ConfigError("must be positive", "rope.base");
        if (head_dim == 0 || head_dim % 2 != 0) {
            throw ConfigError("must be even and positive", "rope.head_dim");
        }
        std::size_t sum = 0;
        for (std::size_t d : axis_split) {
            if (d < 2 || d % 2 != 0) throw ConfigError("entries must be even and >= 2", "rope.axis_split");
            sum += d;
        }
        if (sum != head_dim) {
            throw ConfigError("sums to " + std::to_string(sum) + ", head_dim is " +
                                  std::to_string(head_dim),
                              "rope.axis_split,rope.head_dim");
        }
    }
};

/// Token position in the unified global frame: block index plus globalized
/// spatial coordinates.
struct GlobalCoord {
    long t = 0;
    long h = 0;
    long w = 0;

    friend constexpr bool operator==(GlobalCoord, GlobalCoord) = default;
};

/// Local token grid of one frame, row-major.
struct TokenGrid {
    std::size_t height = 0;
    std::size_t width = 0;

    std::size_t size() const { return height * width; }
    Cell local(std::size_t token) const {
        return {static_cast<long>(token / width), static_cast<long>(token % width)};
    }
};

/// theta_j = base^(-2j / axis_dim), j = 0 .. axis_dim/2 - 1.
inline std::vector<double> frequencies(const RopeParams& params, Axis axis) {
    const std::size_t dim = params.axis_dim(axis);
    std::vector<double> theta(dim / 2);
    for (std::size_t j = 0; j < theta.size(); ++j) {
        theta[j] = std::pow(params.base, -2.0 * static_cast<double>(j) / static_cast<double>(dim));
    }
    return theta;
}

/// Frame-local coordinate shifted by the block anchor.
constexpr Cell globalize(Cell local, Cell anchor) { return local + anchor; }

inline GlobalCoord global_coord(long t, Cell local, Cell anchor) {
    const Cell g = globalize(local, anchor);
    return {t, g.h, g.w};
}

/// Global coordinates for every token of a grid placed at `anchor` in block t.
inline std::vector<GlobalCoord> grid_coords(const TokenGrid& grid, long t, Cell anchor) {
    std::vector<GlobalCoord> out;
    out.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out.push_back(global_coord(t, grid.local(i), anchor));
    return out;
}

/// Rotation angles, one per feature pair: the t group, then h, then w.
struct RotaryPhase {
    std::vector<double> angles;
};

/// Precomputed per-axis frequency tables.
class RotaryTable {
public:
    explicit RotaryTable(const RopeParams& params) : params_(params) {
        params.validate();
        for (Axis a : {Axis::t, Axis::h, Axis::w}) tables_[static_cast<std::size_t>(a)] = frequencies(params, a);
    }

    const RopeParams& params() const { return params_; }

    RotaryPhase phase(const GlobalCoord& coord) const {
        RotaryPhase p;
        p.angles.reserve(params_.head_dim / 2);
        const std::array<double, 3> values{static_cast<double>(coord.t), static_cast<double>(coord.h),
                                           static_cast<double>(coord.w)};
        for (std::size_t a = 0; a < 3; ++a) {
            for (double theta : tables_[a]) p.angles.push_back(values[a] * theta);
        }
        return p;
    }

private:
    RopeParams params_;
    std::array<std::vector<double>, 3> tables_;
};

inline RotaryPhase rotary_phase(const GlobalCoord& coord, const RopeParams& params) {
    return RotaryTable(params).phase(coord);
}

/// Rotates each interleaved pair (v[2i], v[2i+1]) by angles[i]. `inverse`
/// rotates by the negated angles.
inline void rotate_inplace(std::span<double> v, const RotaryPhase& phase, bool inverse = false) {
    if (v.size() != 2 * phase.angles.size()) {
        throw DimensionError("rotation: vector length " + std::to_string(v.size()) + " vs " +
                             std::to_string(2 * phase.angles.size()) + " phase slots");
    }
    for (std::size_t i = 0; i < phase.angles.size(); ++i) {
        const double a = inverse ? -phase.angles[i] : phase.angles[i];
        const double c = std::cos(a);
        const double s = std::sin(a);
        const double x = v[2 * i];
        const double y = v[2 * i + 1];
        v[2 * i] = x * c - y * s;
        v[2 * i + 1] = x * s + y * c;
    }
}

inline std::vector<double> apply_rotation(std::span<const double> v, const RotaryPhase& phase) {
    std::vector<double> out(v.begin(), v.end());
    rotate_inplace(out, phase);
    return out;
}

/// Rotates every row of `m` by its token's phase.
inline Matrix rotate_rows(const Matrix& m, const std::vector<RotaryPhase>& phases, bool inverse = false) {
    if (phases.size() != m.rows()) throw DimensionError("one phase per token required");
    Matrix out = m;
    for (std::size_t r = 0; r < m.rows(); ++r) rotate_inplace(out.row(r), phases[r], inverse);
    return out;
}

inline std::vector<RotaryPhase> phases_for(const std::vector<GlobalCoord>& coords, const RotaryTable& table) {
    std::vector<RotaryPhase> out;
    out.reserve(coords.size());
    for (const GlobalCoord& c : coords) out.push_back(table.phase(c));
    return out;
}

/// Row-wise softmax in place, max-subtracted.
inline void softmax_rows(Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        double mx = row[0];
        for (double x : row) mx = std::max(mx, x);
        double sum = 0.0;
        for (double& x : row) {
            x = std::exp(x - mx);
            sum += x;
        }
        for (double& x : row) x /= sum;
    }
}

struct AttentionResult {
    Matrix logits;   // scaled q.k after rotation
    Matrix weights;  // row-stochastic
    Matrix output;
};

/// Scaled dot-product attention with q and k rotated by their tokens'
/// positions. Logits are scaled by 1/sqrt(head_dim).
inline AttentionResult scanpe_attention_full(const Matrix& queries, const Matrix& keys, const Matrix& values,
                                             const std::vector<GlobalCoord>& coords,
                                             const RotaryTable& table) {
    const std::size_t n = queries.rows();
    const std::size_t d = table.params().head_dim;
    if (keys.rows() != n || values.rows() != n || coords.size() != n) {
        throw DimensionError("attention: token counts differ");
    }
    if (queries.cols() != d || keys.cols() != d) {
        throw DimensionError("attention: q/k width must equal head_dim " + std::to_string(d));
    }
    const auto phases = phases_for(coords, table);
    const Matrix q = rotate_rows(queries, phases);
    const Matrix k = rotate_rows(keys, phases);
    AttentionResult res;
    res.logits = linalg::matmul_nt(q, k);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : res.logits.data()) x *= scale;
    res.weights = res.logits;
    softmax_rows(res.weights);
    res.output = linalg::matmul(res.weights, values);
    return res;
}

inline Matrix scanpe_attention(const Matrix& queries, const Matrix& keys, const Matrix& values,
                               const std::vector<GlobalCoord>& coords, const RopeParams& params) {
    return scanpe_attention_full(queries, keys, values, coords, RotaryTable(params)).output;
}

}  // namespace scrollscape

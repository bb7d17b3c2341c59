#pragma once

// Evo-system containers. All operators act on orthonormal coordinates
// (x = W^{1/2} u for lumped weights W), so weighted adjoints are plain transposes
// and the state Euclidean norm is the L2 norm.

#include "piezo/types.hpp"

#include <string>

namespace piezo {

struct StateBlock {
    std::string name;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

class StateLayout {
public:
    StateLayout() = default;
    explicit StateLayout(const std::vector<std::pair<std::string, Eigen::Index>>& blocks);

    Eigen::Index size() const { return size_; }
    const std::vector<StateBlock>& blocks() const { return blocks_; }
    bool has(const std::string& name) const;
    const StateBlock& block(const std::string& name) const;

    auto segment(Vec& x, const std::string& name) const
    {
        const auto& b = block(name);
        return x.segment(b.offset, b.size);
    }
    auto segment(const Vec& x, const std::string& name) const
    {
        const auto& b = block(name);
        return x.segment(b.offset, b.size);
    }

private:
    std::vector<StateBlock> blocks_;
    Eigen::Index size_ = 0;
};

/// B1 (G + alpha z)^{-1} B2.
struct ResolventBlock {
    SpMat B1;   // n x m
    Mat G;      // m x m, symmetric positive definite
    Mat alpha;  // m x m
    SpMat B2;   // m x n
};

/// z -> instant + sum_k B1_k (G_k + alpha_k z)^{-1} B2_k.
struct RationalFamily {
    SpMat instant;
    std::vector<ResolventBlock> blocks;

    Eigen::Index size() const { return instant.rows(); }
    void validate() const;
    SpMat evaluate(double z) const;
    Mat evaluate_dense(double z) const;

    static RationalFamily zero(Eigen::Index n);
};

struct EvoSystem {
    SpMat M0;
    RationalFamily M1;
    SpMat A;
    StateLayout layout;
    double c0 = 0.0;
    bool certified = false;

    Eigen::Index size() const { return M0.rows(); }
    void validate() const;
};

double symmetry_defect(const SpMat& m);
/// |A + A^T| / |A| (Frobenius), 0 for A = 0.
double skew_defect(const SpMat& a);

} // namespace piezo

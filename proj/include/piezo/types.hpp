#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>
#include <vector>

namespace piezo {

using Scalar = double;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Triplets = std::vector<Triplet>;

/// Thrown for contract violations: bad input, dimension mismatch, singular data.
class Error : public std::runtime_error {
public:
    enum class Kind { InvalidInput, DimensionMismatch, Singular, Internal };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

inline void require(bool cond, Error::Kind kind, const std::string& msg)
{
    if (!cond) {
        throw Error(kind, msg);
    }
}

} // namespace piezo

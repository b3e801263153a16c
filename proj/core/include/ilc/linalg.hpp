#pragma once

#include <Eigen/Dense>
#include <vector>

namespace ilc {

// Row-wise stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Argmax per row; ties break toward the lowest index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& logits);

// z = a * W^T + b, each coefficient accumulated in fixed input order, so a
// row's result does not depend on the rest of the batch.
Eigen::MatrixXd affine_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& W,
                            const Eigen::VectorXd& b);

}  // namespace ilc

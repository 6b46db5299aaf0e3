#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace uncond::st {

// Orthonormal k-frame in R^n, stored as an n x k matrix with U^T U = I.
using Frame = Eigen::MatrixXd;

// Thin QR factor of A with the sign convention diag(R) > 0, which makes the
// result a deterministic function of A alone.  A must have full column rank.
Frame qr_retract(const Eigen::MatrixXd& a);

// Haar-distributed random frame (n x k) from a seeded Gaussian matrix.
Frame random_frame(int n, int k, uint64_t seed);

// Haar-distributed orthogonal matrix (n x n).
Eigen::MatrixXd haar_orthogonal(int n, uint64_t seed);

// Projects an arbitrary n x k matrix Z onto the tangent space of the Stiefel
// manifold at U: Z - U sym(U^T Z).
Eigen::MatrixXd tangent_project(const Frame& u, const Eigen::MatrixXd& z);

// Orthonormal basis of the tangent space at U, one n x k matrix per element.
// Dimension is nk - k(k+1)/2.
std::vector<Eigen::MatrixXd> tangent_basis(const Frame& u);

// Manifold dimension nk - k(k+1)/2.
int stiefel_dim(int n, int k);

}  // namespace uncond::st

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "avt/model.hpp"

namespace avt {

// Square row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Per layer A' = 0.5 A + 0.5 I with rows renormalized; returns A'_L ... A'_1.
// Inputs are head-averaged, first layer first.
Matrix attention_rollout(const std::vector<Matrix>& layers);

// [CLASS] row of a backbone rollout (patch columns only) as a grid x grid map.
Matrix class_token_heatmap(const Matrix& rollout, std::size_t grid);

// Last decoder layer attention averaged over heads for a single clip
// ([T, input_dim] or [1, T, input_dim]): a T x T causal matrix.
template <typename T>
Matrix head_temporal_attention(const AnticipativeModel<T>& model, const Tensor<T>& clip);

// Row of the final query position.
std::vector<double> final_query_row(const Matrix& temporal);

// Backbone attention rollout heatmap for each frame of a clip. Throws
// UnsupportedModeError for fixed-feature models.
template <typename T>
std::vector<Matrix> spatial_attention(const AnticipativeModel<T>& model, const Tensor<T>& clip);

std::string matrix_to_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
// Binary 8-bit PGM (P5), min-max normalized; a constant map is written as 0.
std::vector<unsigned char> encode_pgm(const Matrix& m);
void write_pgm(const std::filesystem::path& path, const Matrix& m);

}  // namespace avt

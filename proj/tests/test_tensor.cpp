#include "ntf/tensor.hpp"
#include "ntf/tensor_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace ntf {
namespace {

DenseTensor3 enumeration_tensor() {
  // x_ijk = 4i + 2j + k, zero-based
  DenseTensor3 x({2, 2, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) x(i, j, k) = static_cast<double>(4 * i + 2 * j + k);
  return x;
}

TEST(DenseTensor3, RejectsNegativeAndMissizedStores) {
  EXPECT_THROW(DenseTensor3({1, 1, 2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(DenseTensor3({1, 1, 2}, {1.0, -0.5}), std::invalid_argument);
  EXPECT_NO_THROW(DenseTensor3({1, 1, 2}, {1.0, 0.0}));
}

TEST(Matricize, DegenerateSingleEntry) {
  const DenseTensor3 x({1, 1, 1}, {5.0});
  for (int mode = 1; mode <= 3; ++mode) {
    const Matrix m = matricize(x, mode);
    ASSERT_EQ(m.rows(), 1);
    ASSERT_EQ(m.cols(), 1);
    EXPECT_EQ(m(0, 0), 5.0);
  }
}

TEST(Matricize, EnumerationPlacementMode1) {
  const Matrix m = matricize(enumeration_tensor(), 1);
  // Column index k * T + j: third mode slowest, matching C ⊙ B.
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) EXPECT_EQ(m(i, k * 2 + j), 4 * i + 2 * j + k);
  EXPECT_EQ(m(0, 1), 2.0);  // (i=0, j=1, k=0)
  EXPECT_EQ(m(0, 2), 1.0);  // (i=0, j=0, k=1)
  EXPECT_EQ(m(1, 3), 7.0);
}

TEST(Matricize, EnumerationPlacementModes2And3) {
  const Matrix m2 = matricize(enumeration_tensor(), 2);
  const Matrix m3 = matricize(enumeration_tensor(), 3);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(m2(j, k * 2 + i), 4 * i + 2 * j + k);
        EXPECT_EQ(m3(k, j * 2 + i), 4 * i + 2 * j + k);
      }
}

TEST(Matricize, InvalidModeThrows) {
  EXPECT_THROW(matricize(enumeration_tensor(), 0), std::invalid_argument);
  EXPECT_THROW(matricize(enumeration_tensor(), 4), std::invalid_argument);
}

TEST(Matricize, KruskalFactorFormsAllModes) {
  std::mt19937_64 rng(11);
  const Matrix a = oracle::random_matrix(rng, 3, 2);
  const Matrix b = oracle::random_matrix(rng, 4, 2);
  const Matrix c = oracle::random_matrix(rng, 5, 2);
  const DenseTensor3 x = oracle::triple_sum(a, b, c);
  const double nx = x.norm();
  EXPECT_LT((matricize(x, 1) - a * khatri_rao(c, b).transpose()).norm() / nx, 1e-12);
  EXPECT_LT((matricize(x, 2) - b * khatri_rao(c, a).transpose()).norm() / nx, 1e-12);
  EXPECT_LT((matricize(x, 3) - c * khatri_rao(b, a).transpose()).norm() / nx, 1e-12);
}

TEST(Tensorize, RoundTripIsBitExact) {
  std::mt19937_64 rng(5);
  for (const DenseTensor3& x : {enumeration_tensor(), oracle::random_tensor(rng, {3, 4, 5})}) {
    for (int mode = 1; mode <= 3; ++mode) EXPECT_EQ(tensorize(matricize(x, mode), mode, x.dims()), x);
  }
}

TEST(Tensorize, ShapeMismatchThrows) {
  EXPECT_THROW(tensorize(Matrix::Zero(2, 3), 2, {3, 1, 2}), std::invalid_argument);
  EXPECT_THROW(tensorize(Matrix::Zero(1, 6), 5, {3, 1, 2}), std::invalid_argument);
}

TEST(KhatriRao, IdentityCase) {
  const Matrix k = khatri_rao(Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  Matrix expected(4, 2);
  expected << 1, 0, 0, 0, 0, 0, 0, 1;
  EXPECT_EQ(k, expected);
}

TEST(KhatriRao, HandExpandedExample) {
  Matrix a(2, 2), b(2, 2), expected(4, 2);
  a << 1, 2, 3, 4;
  b << 0, 1, 1, 0;
  expected << 0, 2, 1, 0, 0, 4, 3, 0;
  EXPECT_EQ(khatri_rao(a, b), expected);
}

TEST(KhatriRao, GramIdentity) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 3, 2, -1.0, 1.0);
    const Matrix b = oracle::random_matrix(rng, 4, 2, -1.0, 1.0);
    const Matrix k = khatri_rao(a, b);
    const Matrix lhs = k.transpose() * k;
    const Matrix rhs = (a.transpose() * a).cwiseProduct(b.transpose() * b);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(KhatriRao, ColumnMismatchThrows) {
  EXPECT_THROW(khatri_rao(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(Reconstruct, SmallCases) {
  Matrix a(2, 1), b(1, 1), c(1, 1);
  a << 1, 0;
  b << 1;
  c << 1;
  const DenseTensor3 x = reconstruct(KruskalTensor(a, b, c));
  EXPECT_EQ(x(0, 0, 0), 1.0);
  EXPECT_EQ(x(1, 0, 0), 0.0);

  const DenseTensor3 z = reconstruct(KruskalTensor(Matrix::Zero(3, 2), Matrix::Zero(4, 2), Matrix::Zero(5, 2)));
  EXPECT_EQ(z.sum(), 0.0);
}

TEST(Reconstruct, MatchesTripleSumOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = oracle::random_matrix(rng, 3, 2);
    const Matrix b = oracle::random_matrix(rng, 4, 2);
    const Matrix c = oracle::random_matrix(rng, 5, 2);
    const Vector w = oracle::random_matrix(rng, 2, 1, 0.5, 2.0);
    const DenseTensor3 x = reconstruct(KruskalTensor(a, b, c, w));
    const DenseTensor3 ref = oracle::triple_sum(a, b, c, w);
    EXPECT_LT(frobenius_distance(x, ref), 1e-12);
    for (double v : x.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(Normalize, UnitColumnsAndSameTensor) {
  std::mt19937_64 rng(23);
  const KruskalTensor k(oracle::random_matrix(rng, 4, 3, 0.0, 5.0), oracle::random_matrix(rng, 3, 3),
                        oracle::random_matrix(rng, 6, 3, 0.0, 9.0));
  const KruskalTensor nk = normalize(k);
  for (Eigen::Index r = 0; r < 3; ++r) {
    EXPECT_NEAR(nk.a.col(r).norm(), 1.0, 1e-14);
    EXPECT_NEAR(nk.b.col(r).norm(), 1.0, 1e-14);
    EXPECT_NEAR(nk.c.col(r).norm(), 1.0, 1e-14);
  }
  EXPECT_LT(frobenius_distance(reconstruct(nk), reconstruct(k)), 1e-12 * reconstruct(k).norm());
}

TEST(Frobenius, Cases) {
  std::mt19937_64 rng(29);
  const DenseTensor3 x = oracle::random_tensor(rng, {3, 4, 5});
  EXPECT_EQ(frobenius_distance(x, x), 0.0);
  EXPECT_EQ(frobenius_distance(DenseTensor3({1, 1, 2}, {3.0, 4.0}), DenseTensor3({1, 1, 2})), 5.0);

  const DenseTensor3 y = oracle::random_tensor(rng, {3, 4, 5});
  double s = 0.0;
  for (std::size_t p = 0; p < x.size(); ++p) s += (x.values()[p] - y.values()[p]) * (x.values()[p] - y.values()[p]);
  EXPECT_NEAR(frobenius_distance(x, y), std::sqrt(s), 1e-12);
  EXPECT_THROW(frobenius_distance(x, DenseTensor3({3, 4, 4})), std::invalid_argument);
}

TEST(SquaredResidual, MatchesDenseDifference) {
  std::mt19937_64 rng(31);
  const DenseTensor3 x = oracle::random_tensor(rng, {4, 3, 6});
  const KruskalTensor k(oracle::random_matrix(rng, 4, 2), oracle::random_matrix(rng, 3, 2),
                        oracle::random_matrix(rng, 6, 2), Vector::Constant(2, 0.7));
  const double d = frobenius_distance(x, reconstruct(k));
  EXPECT_NEAR(squared_residual(x, k), d * d, 1e-12);
}

TEST(TensorIo, BinaryRoundTripAndLayout) {
  const DenseTensor3 x({1, 2, 1}, {1.5, 0.0});
  std::stringstream ss;
  write_tensor_binary(ss, x, ValueSemantics::trade_counts);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 40u + 16u);
  EXPECT_EQ(bytes.substr(0, 4), "NTF3");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);   // version
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 1u);   // semantics
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 2u);  // T
  // 1.5 = 0x3FF8000000000000, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[46]), 0xF8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[47]), 0x3Fu);

  std::stringstream in(bytes);
  const TensorFile back = read_tensor_binary(in);
  EXPECT_EQ(back.tensor, x);
  EXPECT_EQ(back.semantics, ValueSemantics::trade_counts);
}

TEST(TensorIo, RejectsCorruptFiles) {
  std::stringstream bad_magic("XXXX");
  EXPECT_THROW(read_tensor_binary(bad_magic), format_error);

  std::stringstream ss;
  write_tensor_binary(ss, DenseTensor3({2, 2, 2}));
  std::string truncated = ss.str();
  truncated.resize(truncated.size() - 3);
  std::stringstream tr(truncated);
  EXPECT_THROW(read_tensor_binary(tr), format_error);
}

TEST(TensorIo, JsonVariantMatchesBinary) {
  std::mt19937_64 rng(37);
  const DenseTensor3 x = oracle::random_tensor(rng, {2, 3, 4});
  const TensorFile back = tensor_from_json(nlohmann::json::parse(tensor_to_json(x, ValueSemantics::million_eur).dump()));
  EXPECT_EQ(back.tensor, x);
  EXPECT_EQ(back.semantics, ValueSemantics::million_eur);
}

}  // namespace
}  // namespace ntf

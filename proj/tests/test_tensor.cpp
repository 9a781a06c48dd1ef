#include "advreg/tensor.hpp"

#include <gtest/gtest.h>

using advreg::Tensor;

TEST(Tensor, ShapeAndSizeAgree) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_EQ(t.ndim(), 3);
  EXPECT_EQ(t.dim(1), 3);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], 0.0);
}

TEST(Tensor, DataLengthMustMatchShape) {
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), advreg::ShapeError);
  EXPECT_THROW(Tensor({0, 3}), advreg::ShapeError);
  EXPECT_THROW(Tensor({-1}), advreg::ShapeError);
}

TEST(Tensor, FactoriesAndEquality) {
  Tensor a = Tensor::full({2, 2}, 1.5);
  Tensor b({2, 2}, {1.5, 1.5, 1.5, 1.5});
  EXPECT_EQ(a, b);
  EXPECT_EQ(Tensor::scalar(3.0).size(), 1u);
  EXPECT_EQ(Tensor::of({1.0, 2.0}).dim(0), 2);
}

TEST(Tensor, FiniteCheck) {
  Tensor t = Tensor::of({1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Tensor, InPlaceHelpers) {
  Tensor a = Tensor::of({1.0, 2.0});
  Tensor b = Tensor::of({10.0, 20.0});
  advreg::add_in_place(a, b);
  EXPECT_EQ(a, Tensor::of({11.0, 22.0}));
  advreg::axpy_in_place(a, -1.0, b);
  EXPECT_EQ(a, Tensor::of({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(advreg::max_abs_diff(a, b), 18.0);
  Tensor c({3});
  EXPECT_THROW(advreg::add_in_place(a, c), advreg::ShapeError);
}

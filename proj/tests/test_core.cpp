#include <doctest.h>

#include "walloc/core.hpp"

using namespace walloc;

namespace {

PurchaseOrder two_line_po() {
  PurchaseOrder po;
  po.id = "po-1";
  po.business_unit = "Apparel";
  po.lines.push_back({{"A", {}, "Tshirts", "Men"}, 3});
  po.lines.push_back({{"B", {}, "Tshirts", "Men"}, 5});
  return po;
}

}  // namespace

TEST_CASE("well-formed instance validates") {
  auto po = two_line_po();
  WarehouseSet ws{{"W1", "W2"}, {10, 10}};
  ExistingInventory e(2, 2);
  CHECK(check_instance(po, ws, &e).empty());
  CHECK_NOTHROW(validate_instance(po, ws, &e));
}

TEST_CASE("duplicate sku id is rejected by name") {
  auto po = two_line_po();
  po.lines.push_back({{"A", {}, "Tshirts", "Men"}, 1});
  WarehouseSet ws{{"W1", "W2"}, {10, 10}};
  auto v = check_instance(po, ws);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::DuplicateSku);
  CHECK(v[0].detail == "A");
  CHECK_THROWS_AS(validate_instance(po, ws), DuplicateSku);
}

TEST_CASE("inventory shape mismatch names the shapes") {
  auto po = two_line_po();
  WarehouseSet ws{{"W1", "W2"}, {10, 10}};
  ExistingInventory e(3, 2);
  auto v = check_instance(po, ws, &e);
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == Violation::Kind::ShapeMismatch);
  CHECK_THROWS_AS(validate_instance(po, ws, &e), ShapeMismatch);
}

TEST_CASE("zero quantity is a quantity violation") {
  auto po = two_line_po();
  po.lines[0].quantity = 0;
  WarehouseSet ws{{"W1", "W2"}, {10, 10}};
  CHECK_THROWS_AS(validate_instance(po, ws), NegativeQuantity);
}

TEST_CASE("allocation feasibility checks") {
  auto po = two_line_po();  // quantities 3, 5
  WarehouseSet ws{{"W1", "W2"}, {4, 4}};
  AllocationMatrix x = MatI::from_rows({{2, 1, 0}, {2, 3, 0}});
  CHECK(satisfies_quantity_constraint(x, po));
  CHECK(satisfies_capacity_constraint(x, ws));

  AllocationMatrix bad_row = MatI::from_rows({{2, 2, 0}, {2, 3, 0}});
  CHECK_FALSE(satisfies_quantity_constraint(bad_row, po));

  AllocationMatrix over_cap = MatI::from_rows({{3, 0, 0}, {2, 3, 0}});
  CHECK_FALSE(satisfies_capacity_constraint(over_cap, ws));

  AllocationMatrix with_na = MatI::from_rows({{2, 0, 1}, {2, 3, 0}});
  CHECK(satisfies_quantity_constraint(with_na, po));
  CHECK(satisfies_capacity_constraint(with_na, ws));
}

TEST_CASE("penalty matrix construction") {
  MatD trunc = MatD::from_rows({{0, 3}, {2, 0}});

  SUBCASE("default lambda beats K * max off-diagonal") {
    auto l = PenaltyMatrix::from_truncated(trunc);
    CHECK(l.lambda_na() == doctest::Approx(2 * 3 + 1));
    CHECK(l.cost(0, 2) == l.lambda_na());
    CHECK(l.cost(0, 1) == 3);
  }
  SUBCASE("lambda_na <= max off-diagonal is rejected") {
    CHECK_THROWS_AS(PenaltyMatrix::from_truncated(trunc, 3.0), ValidationError);
    CHECK_THROWS_AS(PenaltyMatrix::from_truncated(trunc, 2.5), ValidationError);
    CHECK_NOTHROW(PenaltyMatrix::from_truncated(trunc, 3.5));
  }
  SUBCASE("distance table gets a zero diagonal") {
    MatD d = MatD::from_rows({{5, 3}, {2, 7}});
    auto l = PenaltyMatrix::from_distances(d);
    CHECK(l.truncated()(0, 0) == 0);
    CHECK(l.truncated()(1, 1) == 0);
    CHECK(l.truncated()(0, 1) == 3);
  }
  SUBCASE("negative penalties rejected") {
    CHECK_THROWS_AS(PenaltyMatrix::from_truncated(MatD::from_rows({{0, -1}, {1, 0}})),
                    ValidationError);
  }
}

TEST_CASE("probability row validation") {
  SplitProbabilityMatrix good = MatD::from_rows({{0.5, 0.5}, {1.0, 0.0}});
  CHECK(probability_rows_valid(good));
  SplitProbabilityMatrix off = MatD::from_rows({{0.5, 0.4}});
  CHECK_FALSE(probability_rows_valid(off));
  SplitProbabilityMatrix neg = MatD::from_rows({{1.5, -0.5}});
  CHECK_FALSE(probability_rows_valid(neg));
}

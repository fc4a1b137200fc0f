#include <doctest.h>

#include "gradient_suite.hpp"

namespace gs = ramdepth::gradsuite;

namespace {

void check_all(const std::vector<gs::CaseResult>& cases) {
  for (const auto& c : cases) {
    INFO(c.name << ": max rel error " << c.max_rel_error << " over " << c.coordinates << " coordinates, worst "
                << c.worst);
    CHECK(c.passed());
  }
}

}  // namespace

TEST_CASE("every differentiable op matches central differences") { check_all(gs::run_op_cases(11)); }

TEST_CASE("end-to-end gradient through two iterations") { check_all(gs::run_end_to_end_cases(5, 2)); }

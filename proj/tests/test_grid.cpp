#include <doctest.h>

#include <cmath>
#include <string>

#include "gridshield/grid.hpp"
#include "oracles.hpp"

using namespace gridshield;

namespace {

const char* kCase3 = R"({
  "id": "case3",
  "buses": [
    {"id": 1, "type": "slack", "base_load": 0.0},
    {"id": 2, "type": "load", "base_load": 0.5},
    {"id": 3, "type": "load", "base_load": 0.3}
  ],
  "branches": [
    {"from": 1, "to": 2, "x": 0.1},
    {"from": 2, "to": 3, "x": 0.1}
  ],
  "measurements": [
    {"kind": "flow", "loc": [1, 2], "sigma": 0.01},
    {"kind": "flow", "loc": [2, 3], "sigma": 0.01},
    {"kind": "injection", "loc": 2, "sigma": 0.01},
    {"kind": "injection", "loc": 3, "sigma": 0.01}
  ]
})";

std::string data_path(const std::string& name) {
    return std::string(GRIDSHIELD_DATA_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("3-bus jacobian matches the hand-derived DC sensitivities") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    CHECK(c.state_dim() == 2);
    CHECK(c.meas_dim() == 4);

    // Flow (1,2) = -10 th2; flow (2,3) = 10 th2 - 10 th3;
    // p2 = 20 th2 - 10 th3; p3 = -10 th2 + 10 th3. States ordered (th2, th3).
    const double expected[4][2] = {{-10, 0}, {10, -10}, {20, -10}, {-10, 10}};
    for (int r = 0; r < 4; ++r)
        for (int s = 0; s < 2; ++s)
            CHECK(c.jacobian()(r, s) == doctest::Approx(expected[r][s]).epsilon(1e-12));

    Eigen::FullPivLU<Eigen::MatrixXd> lu(c.jacobian());
    CHECK(lu.rank() == 2);
}

TEST_CASE("disconnected bus is rejected as unobservable") {
    const char* text = R"({
      "buses": [
        {"id": 1, "type": "slack", "base_load": 0.0},
        {"id": 2, "type": "load", "base_load": 0.2},
        {"id": 3, "type": "load", "base_load": 0.2},
        {"id": 4, "type": "load", "base_load": 0.2}
      ],
      "branches": [
        {"from": 1, "to": 2, "x": 0.1},
        {"from": 2, "to": 3, "x": 0.1}
      ],
      "measurements": [
        {"kind": "flow", "loc": [1, 2], "sigma": 0.01},
        {"kind": "flow", "loc": [2, 3], "sigma": 0.01},
        {"kind": "injection", "loc": 2, "sigma": 0.01},
        {"kind": "injection", "loc": 3, "sigma": 0.01},
        {"kind": "injection", "loc": 4, "sigma": 0.01}
      ]
    })";
    CHECK_THROWS_AS(grid::parse_case(text, "x"), grid::CaseError);
}

TEST_CASE("case validation failures") {
    CHECK_THROWS_AS(grid::parse_case("{not json", "x"), grid::CaseError);
    CHECK_THROWS_AS(grid::load_case("/nonexistent/case.json"), grid::CaseError);
    // duplicate ids
    const char* dup = R"({
      "buses": [{"id": 1, "type": "slack"}, {"id": 1, "type": "load"}],
      "branches": [], "measurements": []
    })";
    CHECK_THROWS_WITH_AS(grid::parse_case(dup, "x"),
                         doctest::Contains("duplicate bus id"), grid::CaseError);
}

TEST_CASE("bundled 14-bus case has the documented shape") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    CHECK(c.id == "ieee14");
    CHECK(c.state_dim() == 13);
    CHECK(c.meas_dim() == 48);
    CHECK(c.meas_dim() >= 40);
    // flows owned by the from-bus, injections/voltages by their own bus
    CHECK(c.measurements[0].owner_bus == 1);
    CHECK(c.measurements[20].owner_bus == 1);
    CHECK(c.measurements[34].owner_bus == 1);
}

TEST_CASE("zero-noise flat profile gives identical consistent samples") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    grid::LoadProfile flat;
    flat.shape = {1.0};
    flat.noise_sigma = 0.0;
    const grid::DayStream day = grid::simulate_day(c, flat, 10, 99);
    for (int k = 0; k < 10; ++k) {
        CHECK(day.z(k, 0) == day.z(0, 0));
        CHECK((day.z.row(k) - day.z_true.row(k)).lpNorm<Eigen::Infinity>() == 0.0);
    }
    // hand-solved operating point: f12=0.8, f23=0.3, p2=-0.5, p3=-0.3
    CHECK(day.z(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(day.z(0, 1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(day.z(0, 2) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(day.z(0, 3) == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("kirchhoff consistency on the 14-bus case at zero noise") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    grid::LoadProfile p = grid::default_profile(64);
    p.noise_sigma = 0.0;
    const grid::DayStream day = grid::simulate_day(c, p, 64, 5);
    // injection row == sum of signed incident flow rows, exactly
    for (int k = 0; k < 64; ++k) {
        for (int m = 0; m < c.meas_dim(); ++m) {
            if (c.measurements[m].kind != grid::MeasKind::Injection) continue;
            const int bus = c.measurements[m].bus;
            double acc = 0.0;
            for (int f = 0; f < c.meas_dim(); ++f) {
                if (c.measurements[f].kind != grid::MeasKind::Flow) continue;
                if (c.measurements[f].from == bus) acc += day.z_true(k, f);
                if (c.measurements[f].to == bus) acc -= day.z_true(k, f);
            }
            CHECK(day.z_true(k, m) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
}

TEST_CASE("seed determinism and profile periodicity") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    grid::LoadProfile p = grid::default_profile(16);
    const grid::DayStream a = grid::simulate_day(c, p, 40, 1234);
    const grid::DayStream b = grid::simulate_day(c, p, 40, 1234);
    CHECK((a.z - b.z).lpNorm<Eigen::Infinity>() == 0.0);

    p.noise_sigma = 0.0;
    const grid::DayStream q = grid::simulate_day(c, p, 40, 1);
    for (int k = 0; k + 16 < 40; ++k)
        CHECK(q.z_true(k, 0) == doctest::Approx(q.z_true(k + 16, 0)).epsilon(1e-12));
}

TEST_CASE("day-long run keeps relative noise near one percent") {
    const grid::GridCase c = grid::load_case(data_path("ieee14.json"));
    const grid::LoadProfile p = grid::default_profile(21600);
    const grid::DayStream day = grid::simulate_day(c, p, 21600, 2024);
    int checked = 0;
    for (int m = 0; m < c.meas_dim(); ++m) {
        double mean_mag = 0.0;
        for (int k = 0; k < 21600; ++k) mean_mag += std::abs(day.z_true(k, m));
        mean_mag /= 21600;
        if (mean_mag < 0.05) continue;  // dead or near-zero rows carry no noise scale
        double var = 0.0;
        for (int k = 0; k < 21600; ++k) {
            const double e = day.z(k, m) - day.z_true(k, m);
            var += e * e;
        }
        const double ratio = std::sqrt(var / 21600) / mean_mag;
        CHECK(ratio > 0.008);
        CHECK(ratio < 0.012);
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("simulate_day rejects bad sample counts") {
    const grid::GridCase c = grid::parse_case(kCase3, "case3");
    CHECK_THROWS_AS(grid::simulate_day(c, grid::default_profile(4), 0, 1),
                    grid::CaseError);
}

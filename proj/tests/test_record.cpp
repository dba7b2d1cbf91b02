#include <doctest.h>

#include <cmath>
#include <limits>

#include "qproj/acceptance.hpp"
#include "qproj/record.hpp"
#include "qproj/rng.hpp"

using namespace qproj;

TEST_CASE("record JSON round trip") {
  ExperimentRecord r;
  r.experiment = "switch";
  r.params = {{"fn", "OR"}, {"n", 3}, {"p", "1/3"}, {"list", {1, 2, 3}}};
  r.seed = std::numeric_limits<std::uint64_t>::max();
  r.trials = 100000;
  r.estimate = 0.1;
  r.stderr_ = 1.0 / 3.0;
  r.paper_bound = std::nextafter(1.0, 2.0);
  r.pass = false;
  CHECK(record_from_json(nlohmann::json::parse(to_json_line(r))) == r);

  // Nulls stay nulls.
  ExperimentRecord bare;
  bare.experiment = "x";
  const auto j = nlohmann::json::parse(to_json_line(bare));
  CHECK(j["estimate"].is_null());
  CHECK(j["wall_time"].is_null());
  CHECK(record_from_json(j) == bare);

  Rng rng(5);
  for (int i = 0; i < 500; ++i) {
    ExperimentRecord q;
    q.experiment = "e" + std::to_string(i);
    q.params = {{"i", i}};
    q.seed = rng.next();
    q.trials = rng.next() >> 20;
    const double v = std::ldexp(rng.uniform(), static_cast<int>(rng.below(200)) - 100);
    if (rng.next() & 1) q.estimate = v;
    if (rng.next() & 1) q.stderr_ = v / 7;
    if (rng.next() & 1) q.wall_time = v * 3;
    q.pass = rng.next() & 1;
    CHECK(record_from_json(nlohmann::json::parse(to_json_line(q))) == q);
  }

  CHECK_THROWS(record_from_json(nlohmann::json::parse(R"({"experiment":"x"})")));
  CHECK_THROWS(record_from_json(nlohmann::json::parse(
      R"({"experiment":"x","params":3,"seed":0,"trials":0,"pass":true})")));
}

TEST_CASE("record CSV columns") {
  CHECK(csv_header() == "experiment,seed,trials,estimate,stderr,paper_bound,pass,wall_time,params");
  ExperimentRecord r;
  r.experiment = "gadget";
  r.params = {{"N", 4}};
  r.seed = 7;
  r.trials = 16;
  r.estimate = 1.0;
  CHECK(to_csv_line(r) == "gadget,7,16,1.0,,,true,,\"{\"\"N\"\":4}\"");
}

TEST_CASE("corcnf instances are seed-determined") {
  Rng a(instance_seed(7, 7, 3)), b(instance_seed(7, 7, 3)), c(instance_seed(7, 7, 4));
  const auto x = random_cnf_instance(12, a), y = random_cnf_instance(12, b), z = random_cnf_instance(12, c);
  CHECK(x.tau == y.tau);
  CHECK(x.cnf.clauses == y.cnf.clauses);
  CHECK(x.p == y.p);
  CHECK((x.tau != z.tau || x.cnf.clauses != z.cnf.clauses || x.p != z.p));
  for (int i = 0; i < 100; ++i) {
    Rng r(instance_seed(1, 7, i));
    const auto inst = random_cnf_instance(5, r);
    CHECK(inst.tau.size() <= 5);
    CHECK(inst.cnf.width() <= 3);
    CHECK(inst.p >= 0);
    CHECK(inst.p <= 1);
  }
}

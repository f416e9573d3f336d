#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "kolpinn/config.hpp"

using namespace kolpinn;
using nlohmann::json;

namespace {

json minimal_heat() {
  return json{{"seed", 7},
              {"pde", {{"kind", "heat"}, {"dim", 1}, {"kappa", 0.1}}}};
}

}  // namespace

TEST_CASE("minimal heat config parses with defaults") {
  const RunConfig cfg = parse_config(minimal_heat());
  CHECK(cfg.seed == 7);
  CHECK(cfg.pde.kind == "heat");
  CHECK(cfg.pde.dim == 1);
  CHECK(cfg.arch.input_dim() == 2);
  CHECK(cfg.arch.output_dim() == 1);
  CHECK(cfg.n_interior == 512);
  CHECK(cfg.pde.oracle.has_value());
}

TEST_CASE("seeds are mandatory") {
  json j = minimal_heat();
  j.erase("seed");
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("bad specs are rejected as config errors") {
  json unknown = minimal_heat();
  unknown["pde"]["kind"] = "advection";
  CHECK_THROWS_AS(parse_config(unknown), ConfigError);

  json arch = minimal_heat();
  arch["architecture"] = {{"widths", {3, 4, 1}}};  // wrong input width
  CHECK_THROWS_AS(parse_config(arch), ConfigError);

  json counts = minimal_heat();
  counts["collocation"] = {{"interior", 0}};
  CHECK_THROWS_AS(parse_config(counts), ConfigError);

  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("black-scholes config builds the instance") {
  json j = {{"seed", 1},
            {"pde",
             {{"kind", "black-scholes"},
              {"beta", {0.2, 0.3}},
              {"mu_rate", 0.05},
              {"strike", 1.0}}}};
  const RunConfig cfg = parse_config(j);
  CHECK(cfg.pde.dim == 2);
  CHECK(cfg.pde.kind == "black-scholes");
}

TEST_CASE("full-precision decimals round-trip") {
  for (double v : {0.1, 1.0 / 3.0, 2.5e-17, -123456.789012345678}) {
    CHECK(std::strtod(format_full(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("atomic writes leave no temporaries behind") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "kolpinn-test-out";
  fs::remove_all(dir);
  const std::string target = (dir / "a" / "table.csv").string();
  atomic_write(target, "x,y\n1,2\n");
  std::ifstream in(target);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y");
  CHECK(!fs::exists(target + ".tmp"));
  fs::remove_all(dir);
}

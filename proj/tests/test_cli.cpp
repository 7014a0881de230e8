#include "doctest.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <sys/wait.h>

#ifndef RIESZ_LAB_PATH
#error "RIESZ_LAB_PATH must point at the riesz_lab binary"
#endif

namespace {

struct Result {
  int code = -1;
  std::string out;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Result lab(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + RIESZ_LAB_PATH + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp(const std::string& name) { return "riesz_lab_test_" + name; }

}  // namespace

TEST_CASE("energy of the round sphere at alpha = -4") {
  const auto r = lab("energy --surface sphere:r=1 --alpha -4 --order 10");
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j["value"].get<double>() == doctest::Approx(-std::numbers::pi * std::numbers::pi).epsilon(0.01));
  CHECK(j["oracle"].get<double>() == doctest::Approx(-std::numbers::pi * std::numbers::pi).epsilon(1e-14));
  CHECK(j["energy"]["kind"] == "riesz");
}

TEST_CASE("beta of the circle at z = 1") {
  const auto r = lab("beta --surface circle --z 1");
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j["value"].get<double>() == doctest::Approx(16.0 * std::numbers::pi).epsilon(1e-9));
  CHECK(j["oracle"].get<double>() == doctest::Approx(16.0 * std::numbers::pi).epsilon(1e-13));
  CHECK(j["pole"] == false);
}

TEST_CASE("beta at a pole reports the finite part and residue") {
  const auto r = lab("beta --surface circle --z -1");
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j["pole"] == true);
  CHECK(j["value"].get<double>() == doctest::Approx(j["oracle"].get<double>()).epsilon(1e-6));
  CHECK(j["residue"].get<double>() ==
        doctest::Approx(j["oracle_residue"].get<double>()).epsilon(1e-6));
}

TEST_CASE("orthogonal model at alpha = -3") {
  const auto r = lab("model orthogonal --alpha -3 --rho 1");
  REQUIRE(r.code == 0);
  const auto j = r.json();
  CHECK(j["value"].get<double>() == doctest::Approx(23.125).epsilon(5e-3));
  CHECK(j["divergent"] == false);
  const auto d = lab("model orthogonal --alpha -4.5").json();
  CHECK(d["divergent"] == true);
  CHECK(d["value"].is_null());
  CHECK(d["scan"]["law"] == "power");
}

TEST_CASE("exit codes and error reports") {
  const auto bad_surface = lab("energy --surface dodecahedron --alpha 1");
  CHECK(bad_surface.code == 2);
  CHECK(bad_surface.json()["error"]["kind"] == "config");
  CHECK(lab("energy --surface sphere --alpha 1 --bogus").code == 2);
  CHECK(lab("energy --surface sphere").code == 2);
  CHECK(lab("energy --surface sphere --alpha 1 --order 2").code == 2);
  CHECK(lab("energy --surface missing_file.off --ks").code == 2);
  CHECK(lab("--config missing_config.json").code == 2);
  CHECK(lab("frobnicate").code == 2);

  const auto unsupported = lab("energy --surface polygon:n=16 --ks");
  CHECK(unsupported.code == 4);
  CHECK(unsupported.json()["error"]["exit_code"] == 4);

  // inversion center on the surface
  const auto singular = lab("invariance --surface sphere --ks --center 1,0,0 --order 8");
  CHECK(singular.code == 3);
  CHECK(singular.json()["error"]["kind"] == "singular");
}

TEST_CASE("config file entries yield to flags") {
  const std::string cfg = tmp("config.json");
  {
    std::ofstream out(cfg);
    out << R"({"command": "beta", "surface": "circle:r=2", "z": 1, "order": 12})";
  }
  const auto a = lab("--config " + cfg).json();
  CHECK(a["command"] == "beta");
  CHECK(a["z"].get<double>() == 1.0);
  CHECK(a["report"]["order"] == 12);
  CHECK(a["oracle"].get<double>() == doctest::Approx(std::pow(2.0, 3.0) * 16.0 * std::numbers::pi));
  const auto b = lab("beta --config " + cfg + " --z 0.5").json();
  CHECK(b["z"].get<double>() == 0.5);
  CHECK(b["report"]["order"] == 12);
  {
    std::ofstream out(cfg);
    out << "{not json";
  }
  CHECK(lab("--config " + cfg).code == 2);
  std::remove(cfg.c_str());
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  const std::string c1 = tmp("sweep1.csv"), c2 = tmp("sweep2.csv"), plot = tmp("sweep.dat");
  const auto s1 = lab("sweep --alpha -5 --deltas 0.1,0.05,0.025 --csv " + c1 + " --plot " + plot);
  const auto s2 = lab("sweep --alpha -5 --deltas 0.1,0.05,0.025 --csv " + c2 + " --threads 1");
  REQUIRE(s1.code == 0);
  CHECK(s1.out == s2.out);
  CHECK(slurp(c1) == slurp(c2));
  CHECK(slurp(c1).rfind("alpha,delta,energy,lambda_bound_sum\n", 0) == 0);
  const auto dat = slurp(plot);
  CHECK(dat.rfind("# delta energy\n", 0) == 0);
  CHECK(std::count(dat.begin(), dat.end(), '\n') == 4);
  CHECK(lab("sweep --alpha -5 --deltas 0.1,0.05").code == 2);

  const std::string f = "flow --surface icosphere:level=1 --ks --perturb 0.1 --seed 7 --steps 2";
  const auto f1 = lab(f), f2 = lab(f, "RIESZ_LAB_THREADS=1");
  REQUIRE(f1.code == 0);
  CHECK(f1.out == f2.out);
  CHECK(lab("flow --surface icosphere:level=1 --ks --perturb 0.1 --seed 8 --steps 2").out != f1.out);
  for (const auto& p : {c1, c2, plot}) std::remove(p.c_str());
}

TEST_CASE("flow writes meshes that reproduce their energies") {
  const std::string init = tmp("init.off"), fin = tmp("final.off"), traj = tmp("traj.csv");
  const auto r = lab("flow --surface icosphere:level=1 --ks --perturb 0.1 --seed 1 --steps 3"
                     " --initial-off " + init + " --final-off " + fin + " --trajectory " + traj);
  REQUIRE(r.code == 0);
  const auto j = r.json();
  const auto& rows = j["state"]["trajectory"];
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i]["energy"].get<double>() < rows[i - 1]["energy"].get<double>());
  CHECK(slurp(traj).rfind("iteration,energy,step_size,min_distance\n", 0) == 0);

  const auto e0 = lab("energy --ks --surface " + init).json();
  const auto e1 = lab("energy --ks --surface " + fin).json();
  CHECK(e0["value"].get<double>() ==
        doctest::Approx(rows[0]["energy"].get<double>()).epsilon(1e-12));
  CHECK(e1["value"].get<double>() ==
        doctest::Approx(rows[3]["energy"].get<double>()).epsilon(1e-12));
  for (const auto& p : {init, fin, traj}) std::remove(p.c_str());
}

TEST_CASE("invariance and validate commands") {
  const auto inv = lab("invariance --surface ellipsoid --ks --center 2,1,0.5 --radius 1.5 --order 10"
                       " --refined-order 14");
  REQUIRE(inv.code == 0);
  const auto j = inv.json();
  CHECK(j["report"]["relative_difference"].get<double>() < 1e-4);
  CHECK(j["report"]["refinement"].is_object());

  const auto v = lab("validate --surface sphere --eps0 0.1 --b 10 --volume 20");
  REQUIRE(v.code == 0);
  CHECK(v.json()["pass"] == true);
  CHECK(v.json()["euler_characteristic"] == 2);
  const auto small = lab("validate --surface sphere --volume 5").json();
  CHECK(small["pass"] == false);
  CHECK(small["volume_ok"] == false);
}

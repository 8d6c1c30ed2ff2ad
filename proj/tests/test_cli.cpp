#include "lemsim/cli.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "lemsim/csv.hpp"

using namespace lemsim;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"lemsim"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::path("test_tmp") / "cli" / name;
  fs::create_directories(dir);
  return dir;
}

std::string data_file(const std::string& name) {
  return std::string(TEST_DATA_DIR) + "/" + name;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("clear reproduces the worked example") {
  fs::path out = scratch("clear");
  CHECK(run({"clear", "--orders", data_file("orders_example.csv"), "--out-dir", out.string()}) ==
        0);
  CsvTable trades = read_csv((out / "clear_trades.csv").string());
  REQUIRE(trades.rows.size() == 2);
  CHECK(trades.number(0, trades.require_column("price")) == doctest::Approx(40.0));
  CHECK(trades.number(0, trades.require_column("quantity")) == doctest::Approx(8.0));
  CHECK(trades.number(1, trades.require_column("price")) == doctest::Approx(47.5));
  CHECK(trades.number(1, trades.require_column("quantity")) == doctest::Approx(2.0));
}

TEST_CASE("clear accepts an empty order list and rejects malformed rows") {
  fs::path dir = scratch("orders");
  write_file(dir / "empty.csv", "");
  CHECK(run({"clear", "--orders", (dir / "empty.csv").string(), "--no-out"}) == 0);

  write_file(dir / "bad.csv", "owner,price,quantity\n1,50,-10\n2,oops,5\n");
  CHECK(run({"clear", "--orders", (dir / "bad.csv").string(), "--no-out"}) == 2);

  write_file(dir / "orders.json",
             R"([{"owner":1,"price":50,"quantity":-10},{"owner":3,"price":30,"quantity":8}])");
  CHECK(run({"clear", "--orders", (dir / "orders.json").string(), "--no-out"}) == 0);

  write_file(dir / "bad.json", R"([{"owner":1,"price":50}])");
  CHECK(run({"clear", "--orders", (dir / "bad.json").string(), "--no-out"}) == 2);

  CHECK(run({"clear", "--orders", (dir / "missing.csv").string(), "--no-out"}) == 2);
}

TEST_CASE("usage errors exit with code 1") {
  CHECK(run({"simulate", "--scenario", data_file("case1.cfg"), "--strategy", "bogus"}) == 1);
  CHECK(run({"simulate"}) == 1);
  CHECK(run({}) == 1);
}

TEST_CASE("simulate writes the agent tables") {
  fs::path out = scratch("simulate");
  CHECK(run({"simulate", "--scenario", data_file("case1.cfg"), "--strategy", "rb_agg",
             "--out-dir", out.string()}) == 0);
  CHECK(run({"simulate", "--scenario", data_file("case1.cfg"), "--strategy", "rb_p2p",
             "--out-dir", out.string()}) == 0);

  CsvTable agg = read_csv((out / "rb_agg_monetary.csv").string());
  CsvTable p2p = read_csv((out / "rb_p2p_monetary.csv").string());
  REQUIRE(agg.rows.size() == 6);  // Aggregator + 4 prosumers + Sum P2P
  CHECK(agg.rows.front()[0] == "Aggregator");
  CHECK(agg.rows.back()[0] == "Sum P2P");
  // Uniform-price trading weakly dominates the aggregator-only market.
  double agg_sum = agg.number(5, 1), p2p_sum = p2p.number(5, 1);
  CHECK(p2p_sum >= agg_sum);

  CsvTable rewards = read_csv((out / "rb_agg_rewards.csv").string());
  CHECK(rewards.number(0, 1) > 0.0);             // aggregator reward positive
  for (int r = 1; r <= 4; ++r) CHECK(rewards.number(r, 1) <= 0.0);

  CsvTable prices = read_csv((out / "rb_agg_prices.csv").string());
  CHECK(prices.rows.size() == 24);
}

TEST_CASE("simulate on an all-zero scenario writes zero tables") {
  fs::path dir = scratch("zero");
  write_file(dir / "zero.csv",
             "hour,prosumer_1,prosumer_2,f_mp\n0,0,0,20\n1,0,0,20\n2,0,0,20\n");
  write_file(dir / "zero.cfg", "data_csv = zero.csv\nhours = 3\n");
  CHECK(run({"simulate", "--scenario", (dir / "zero.cfg").string(), "--strategy", "rb_agg",
             "--out-dir", dir.string()}) == 0);
  CsvTable t = read_csv((dir / "rb_agg_monetary.csv").string());
  for (size_t r = 0; r < t.rows.size(); ++r) CHECK(t.number(r, 1) == 0.0);
}

TEST_CASE("train then evaluate round-trips through the checkpoint") {
  fs::path out = scratch("train");
  CHECK(run({"train", "--scenario", data_file("case1.cfg"), "--config",
             data_file("train_smoke.cfg"), "--seed", "1", "--out-dir", out.string()}) == 0);
  CHECK(fs::exists(out / "checkpoint.bin"));
  CHECK(fs::exists(out / "training_log.csv"));

  fs::path out2 = scratch("train2");
  CHECK(run({"train", "--scenario", data_file("case1.cfg"), "--config",
             data_file("train_smoke.cfg"), "--seed", "1", "--out-dir", out2.string()}) == 0);
  std::ifstream a(out / "training_log.csv"), b(out2 / "training_log.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());

  fs::path eval_dir = scratch("eval");
  CHECK(run({"evaluate", "--checkpoint", (out / "checkpoint.bin").string(), "--scenario",
             data_file("case1.cfg"), "--episodes", "2", "--out-dir", eval_dir.string()}) == 0);
  CHECK(fs::exists(eval_dir / "marl_monetary.csv"));
  CHECK(fs::exists(eval_dir / "marl_trace.csv"));
  CHECK(fs::exists(eval_dir / "marl_settlement.csv"));

  // Evaluated bid prices stay inside the prosumer price bounds.
  CsvTable prices = read_csv((eval_dir / "marl_prices.csv").string());
  for (size_t r = 0; r < prices.rows.size(); ++r)
    for (int id = 1; id <= 4; ++id) {
      int col = prices.require_column("price_" + std::to_string(id));
      CHECK(prices.number(r, col) >= 0.0);
      CHECK(prices.number(r, col) <= 200.0);
    }

  // The critic-mode flag flips the input dimensions recorded in the header.
  fs::path central = scratch("central");
  CHECK(run({"train", "--scenario", data_file("case1.cfg"), "--config",
             data_file("train_smoke.cfg"), "--seed", "1", "--critic-mode", "centralized",
             "--out-dir", central.string()}) == 0);
  std::ifstream log(central / "training_log.csv");
  std::stringstream content;
  content << log.rdbuf();
  CHECK(content.str().find("critic_input_dim: 44") != std::string::npos);

  CHECK(run({"evaluate", "--checkpoint", (out / "checkpoint.bin").string(), "--scenario",
             data_file("case10.cfg"), "--out-dir", eval_dir.string()}) == 2);  // wrong agent count
}

}  // TEST_SUITE

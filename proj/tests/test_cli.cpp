#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(HEADPRUNE_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const auto p = fs::temp_directory_path() / name;
  std::ofstream(p) << body;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmall = R"({"budget": 0.7,
  "oracle": {"additive": {"baseline": 90, "weights": [[-0.5, 0.2], [0.4, 1.0]]}}})";

}  // namespace

TEST_CASE("cli: prune runs and honours flag overrides") {
  const auto cfg = write_config("headprune_cli_small.json", kSmall);
  const auto out = fs::temp_directory_path() / "headprune_cli_out";
  fs::remove_all(out);
  CHECK(cli("prune astar --config " + cfg.string() + " --out " + out.string()) == 0);
  CHECK(fs::exists(out / "report.json"));
  CHECK(slurp(out / "report.json").find("\"strategy\": \"astar\"") != std::string::npos);

  CHECK(cli("prune local --config " + cfg.string() + " --budget 0 --out " + out.string()) == 0);
  CHECK(slurp(out / "mask_matrix.csv") == "kept,kept\nkept,kept\n");

  CHECK(cli("summarize " + out.string()) == 0);
  fs::remove_all(out);
}

TEST_CASE("cli: exit codes") {
  const auto cfg = write_config("headprune_cli_small.json", kSmall);
  const auto out = fs::temp_directory_path() / "headprune_cli_codes";
  CHECK(cli("prune astar --config /nonexistent.json") == 2);
  CHECK(cli("prune sideways --config " + cfg.string()) == 2);
  CHECK(cli("prune astar --config " + cfg.string() + " --budget -1 --out " + out.string()) == 2);

  const auto both = write_config("headprune_cli_both.json", R"({"budget": 1,
    "oracle": {"additive": {"baseline": 90, "weights": [[1]]}, "table": {"path": "x.json"}}})");
  CHECK(cli("prune astar --config " + both.string()) == 2);

  const auto ext = write_config("headprune_cli_ext.json",
                                std::string(R"({"budget": 1, "oracle": {"external": {"command": "python3 )") +
                                    HEADPRUNE_MOCK_EVALUATOR + R"( --fail-after 2"}}})");
  CHECK(cli("prune astar --config " + ext.string() + " --out " + out.string()) == 3);
  CHECK(fs::exists(out / "report.partial.json"));
  fs::remove_all(out);
}

TEST_CASE("cli: record-table then replay") {
  const auto cfg = write_config("headprune_cli_rec.json", R"({"budget": 1, "geometry": [4, 4],
    "oracle": {"additive": {"baseline": 92.46, "generate": {"nonpositive_count": 6, "seed": 1},
    "noise_sigma": 0.1, "seed": 5}}})");
  const auto a = fs::temp_directory_path() / "headprune_cli_rec_a";
  const auto b = fs::temp_directory_path() / "headprune_cli_rec_b";
  const auto table = fs::temp_directory_path() / "headprune_cli_table.json";
  CHECK(cli("record-table astar --config " + cfg.string() + " --table " + table.string() + " --out " + a.string()) == 0);
  CHECK(cli("replay astar --config " + cfg.string() + " --table " + table.string() + " --out " + b.string()) == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove(table);
}

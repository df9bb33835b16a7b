// SPDX-License-Identifier: Apache-2.0
// Drives the installed command-line binary end to end. The binary path is
// injected at configure time so these tests always exercise the freshly built
// executable.
#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#ifndef GTALAB_CLI_PATH
#error "GTALAB_CLI_PATH must point at the built binary"
#endif

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cli(const std::string& args, bool keep_stderr = false) {
  const std::string cmd = std::string(GTALAB_CLI_PATH) + " " + args +
                          (keep_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST_CASE("cost --table-1 reproduces the per-token cache table") {
  const CmdResult r = run_cli("cost --table-1");
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "preset,cache_floats\n"
        "mha-160m,1536\n"
        "gqa-160m,384\n"
        "mla-160m,288\n"
        "gta-160m-1,192\n"
        "gta-160m-2,192\n"
        "mha-500m,2560\n"
        "gqa-500m,512\n"
        "mla-500m,352\n"
        "gta-500m-3,192\n"
        "gta-500m-4,320\n"
        "gqa-1b,640\n"
        "gta-1b,192\n");
}

TEST_CASE("cost --ratio prints the headline fractions") {
  const CmdResult att = run_cli("cost --preset gta-500m-3,mha-500m --ratio attention");
  CHECK(att.exit_code == 0);
  CHECK(att.out == "0.375\n");

  const CmdResult cache = run_cli("cost --preset gta-1b,gqa-1b --ratio cache");
  CHECK(cache.exit_code == 0);
  CHECK(cache.out == "0.3\n");
}

TEST_CASE("cost emits one CSV row per preset, phase and length") {
  const CmdResult r = run_cli("cost --preset gta-160m-1 --N 1 --phase prefill");
  CHECK(r.exit_code == 0);
  CHECK(r.out ==
        "mechanism,phase,N,linear,attention,cache_floats\n"
        "gta-160m-1,prefill,1,1572864,576,192\n");

  const CmdResult both = run_cli("cost --preset gqa-1b,gta-1b --N 8,64");
  const std::vector<std::string> lines = lines_of(both.out);
  REQUIRE(lines.size() == 9);  // header + 2 presets * 2 phases * 2 lengths
  CHECK(lines[0] == "mechanism,phase,N,linear,attention,cache_floats");
  CHECK(lines[1].rfind("gqa-1b,prefill,8,", 0) == 0);
}

TEST_CASE("cost --format json parses and carries the same fields") {
  const CmdResult r = run_cli("cost --preset gqa-1b --N 2 --phase decode --format json");
  REQUIRE(r.exit_code == 0);
  const nlohmann::json rows = nlohmann::json::parse(r.out);
  REQUIRE(rows.is_array());
  REQUIRE(rows.size() == 1);
  CHECK(rows[0]["mechanism"] == "gqa-1b");
  CHECK(rows[0]["phase"] == "decode");
  CHECK(rows[0]["N"] == 2);
  CHECK(rows[0]["linear"].is_number_unsigned());
  CHECK(rows[0]["attention"].is_number_unsigned());
  CHECK(rows[0]["cache_floats"].is_number_unsigned());
}

TEST_CASE("roofline sweeps the default grid for both phases") {
  const CmdResult r = run_cli("roofline");
  CHECK(r.exit_code == 0);
  const std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 17);  // header + 2 presets * 4 lengths * 2 phases
  CHECK(lines[0] == "preset,phase,N,batch,compute_s,memory_s,total_s,bound");
  CHECK(lines[1].rfind("gta-1b,prefill,64,1,", 0) == 0);
  CHECK(lines[16].rfind("gqa-1b,decode,4096,1,", 0) == 0);
  // Locale-proof numbers: fields hold no commas beyond the seven separators.
  for (std::size_t i = 1; i < lines.size(); ++i)
    CHECK(std::count(lines[i].begin(), lines[i].end(), ',') == 7);
}

TEST_CASE("check exits zero on a green grid and one when a fault is injected") {
  const CmdResult ok = run_cli("check --grid tiny");
  CHECK(ok.exit_code == 0);
  CHECK(lines_of(ok.out).size() == 152);

  const CmdResult bad = run_cli("check --grid tiny --inject-fault");
  CHECK(bad.exit_code == 1);

  const CmdResult again = run_cli("check --grid tiny");
  CHECK(again.out == ok.out);
}

TEST_CASE("check --out writes the report to a file instead of stdout") {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "gtalab_report.jsonl";
  const CmdResult r = run_cli("check --grid tiny --out " + path.string());
  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());

  std::ifstream in(path);
  REQUIRE(in.good());
  std::size_t count = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++count;
    CHECK(nlohmann::json::parse(line).contains("case"));
  }
  CHECK(count == 152);
  std::filesystem::remove(path);
}

TEST_CASE("presets dumps the table with derived columns") {
  const CmdResult r = run_cli("presets --preset gta-1b");
  CHECK(r.exit_code == 0);
  const std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] ==
        "name,layers,hidden_dim,intermediate,n_heads,n_q,n_k,n_c,d_h,d_l,"
        "mla_d_c,mla_d_rope,vocab,cache_floats,attn_params");
  CHECK(lines[1] == "gta-1b,54,1280,3584,20,5,1,1,64,128,0,0,128256,192,4096000");
}

TEST_CASE("bench times the requested mechanisms") {
  const CmdResult r = run_cli("bench --mechanism gta --N 4 --repeat 1");
  CHECK(r.exit_code == 0);
  const std::vector<std::string> lines = lines_of(r.out);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "mechanism,phase,N,median_s");
  CHECK(lines[1].rfind("gta,prefill,4,", 0) == 0);
  CHECK(lines[2].rfind("gta_direct,prefill,4,", 0) == 0);
  CHECK(lines[3].rfind("gta,decode,4,", 0) == 0);
}

TEST_CASE("usage errors and bad input exit with status two") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("cost --preset no-such-model").exit_code == 2);

  const CmdResult err = run_cli("cost --preset no-such-model", true);
  CHECK(err.out.find("no-such-model") != std::string::npos);
  CHECK(err.out.find("gta-1b") != std::string::npos);  // lists what exists

  const std::filesystem::path bad =
      std::filesystem::temp_directory_path() / "gtalab_bad_hw.json";
  std::ofstream(bad) << "{\"profiles\": [{]}\n";
  CHECK(run_cli("roofline --hardware " + bad.string()).exit_code == 2);
  std::filesystem::remove(bad);

  CHECK(run_cli("--help").exit_code == 0);
  CHECK(run_cli("cost --help").exit_code == 0);
}

#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace cbmbr::testing {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("cbmbr_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Runs the CLI with the given argument string; stdout and stderr are captured.
inline CliRun run_cli(const std::string& args) {
  const auto err_path = scratch_dir("cli") / "stderr.txt";
  const std::string cmd = std::string(CBMBR_CLI_PATH) + " " + args + " 2>" + err_path.string();
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t got = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(err_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.err = ss.str();
  return r;
}

/// The decode JSON with timing fields removed.
inline nlohmann::json without_timings(const std::string& out) {
  auto j = nlohmann::json::parse(out);
  j.erase("phase_timings_ns");
  return j;
}

}  // namespace cbmbr::testing

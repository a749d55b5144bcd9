#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mel/error.hpp"
#include "mel/io/json.hpp"

#ifndef MEL_VERSION
#define MEL_VERSION "0.1.0"
#endif

namespace mel::cli {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Override {
  std::string config_value;
  std::string flag_value;
};

/// One per run, written as manifest.json next to the outputs.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> parameters;
  std::map<std::string, std::string> parameter_sources;  ///< flag | config | default
  std::map<std::string, Override> overridden;
  std::uint64_t seed = 0;
  std::string tool_version = MEL_VERSION;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  std::string config_file;
  std::string started;
  std::string finished;

  io::Json to_json() const {
    io::Json j;
    j["subcommand"] = subcommand;
    j["tool_version"] = tool_version;
    j["seed"] = seed;
    j["parameters"] = parameters;
    j["parameter_sources"] = parameter_sources;
    io::Json ov = io::Json::object();
    for (const auto& [k, o] : overridden) ov[k] = {{"config", o.config_value}, {"flag", o.flag_value}};
    j["overridden"] = std::move(ov);
    j["config_file"] = config_file.empty() ? io::Json(nullptr) : io::Json(config_file);
    j["input_digests"] = input_digests;
    j["outputs"] = outputs;
    j["started"] = started;
    j["finished"] = finished;
    return j;
  }
};

/// Output directory plus the manifest that must reference every file in it.
class OutputSink {
 public:
  OutputSink(std::filesystem::path dir, RunManifest& manifest) : dir_(std::move(dir)), manifest_(manifest) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write output file '" + path.string() + "'");
    f << content;
    f.close();
    if (!f) throw Error("failed writing output file '" + path.string() + "'");
    manifest_.outputs.push_back(name);
  }

  void write_json(const std::string& name, const io::Json& j) { write(name, j.dump(2) + "\n"); }

  void finish() {
    manifest_.finished = utc_timestamp();
    const std::string body = manifest_.to_json().dump(2) + "\n";
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    if (!f) throw Error("cannot write manifest in '" + dir_.string() + "'");
    f << body;
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
  RunManifest& manifest_;
};

}  // namespace mel::cli

#include "prefopt/session_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace prefopt {

using nlohmann::json;

std::string to_json_line(const TranscriptEntry& entry) {
  json j;
  j["iteration"] = entry.iteration;
  j["x1"] = entry.x1;
  j["x2"] = entry.x2;
  j["outcome"] = std::string(1, outcome_symbol(entry.outcome));
  j["timestamp"] = entry.timestamp;
  return j.dump();
}

TranscriptEntry parse_transcript_line(const std::string& line) {
  const json j = json::parse(line);
  TranscriptEntry entry;
  entry.iteration = j.at("iteration").get<std::size_t>();
  entry.x1 = j.at("x1").get<Point>();
  entry.x2 = j.at("x2").get<Point>();
  entry.outcome = outcome_from_symbol(j.at("outcome").get<std::string>());
  entry.timestamp = j.value("timestamp", std::string{});
  return entry;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

namespace {

void write_all(int fd, const std::string& data, const std::filesystem::path& path) {
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      ::close(fd);
      throw std::runtime_error("write failed: " + path.string());
    }
    written += static_cast<std::size_t>(n);
  }
}

}  // namespace

void append_transcript(const std::filesystem::path& path, const TranscriptEntry& entry) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw std::runtime_error("cannot open transcript: " + path.string());
  write_all(fd, to_json_line(entry) + "\n", path);
  ::fsync(fd);
  ::close(fd);
}

std::vector<TranscriptEntry> read_transcript(const std::filesystem::path& path) {
  std::vector<TranscriptEntry> entries;
  std::ifstream in(path);
  if (!in) return entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    entries.push_back(parse_transcript_line(line));
  }
  return entries;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw std::runtime_error("cannot write " + tmp.string());
  write_all(fd, contents, tmp);
  ::fsync(fd);
  ::close(fd);
  std::filesystem::rename(tmp, path);
}

}  // namespace prefopt

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "chronicler/corpus.hpp"
#include "chronicler/text.hpp"

namespace chronicler::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    dir_ = std::filesystem::temp_directory_path() /
           ("chronicler_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Chunk make_chunk(const std::string& id, const std::string& text) {
  Chunk c;
  c.id = id;
  c.doc_id = id.substr(0, id.find('#'));
  c.start = 0;
  c.end = static_cast<std::uint32_t>(utf8_length(text));
  c.text = text;
  return c;
}

inline std::filesystem::path data_dir() { return CHRON_DATA_DIR; }
inline std::filesystem::path prompts_dir() { return CHRON_PROMPTS_DIR; }

}  // namespace chronicler::testing

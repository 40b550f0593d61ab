#pragma once

// File helpers. Every read goes through read_text so tests can trace which
// files a phase touches.

#include <filesystem>
#include <string>
#include <vector>

namespace forge {

namespace fs = std::filesystem;

// Whole file as bytes; std::runtime_error naming the path on failure.
std::string read_text(const fs::path& path);

// Writes through a temporary sibling and renames it into place.
void write_text(const fs::path& path, const std::string& content);

// Regular files in a directory with the given extension, sorted by name.
std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension);

// Records the paths read by the current thread while alive. Scopes nest;
// every active scope sees each read.
class ReadTrace {
public:
    ReadTrace();
    ~ReadTrace();
    ReadTrace(const ReadTrace&) = delete;
    ReadTrace& operator=(const ReadTrace&) = delete;

    const std::vector<fs::path>& paths() const { return paths_; }
    bool touched(const std::string& filename) const;

private:
    friend std::string read_text(const fs::path& path);
    std::vector<fs::path> paths_;
};

}  // namespace forge

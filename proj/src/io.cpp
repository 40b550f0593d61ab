#include "forge/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace forge {

namespace {

thread_local std::vector<ReadTrace*> active_traces;

}  // namespace

ReadTrace::ReadTrace() {
    active_traces.push_back(this);
}

ReadTrace::~ReadTrace() {
    std::erase(active_traces, this);
}

bool ReadTrace::touched(const std::string& filename) const {
    return std::any_of(paths_.begin(), paths_.end(),
                       [&](const fs::path& p) { return p.filename() == filename; });
}

std::string read_text(const fs::path& path) {
    for (auto* t : active_traces) t->paths_.push_back(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << content;
        if (!out.flush()) {
            throw std::runtime_error("cannot write " + path.string());
        }
    }
    fs::rename(tmp, path);
}

std::vector<fs::path> list_files(const fs::path& dir, const std::string& extension) {
    std::vector<fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) {
            out.push_back(entry.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace forge

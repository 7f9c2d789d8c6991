#ifndef FISHWEIGHT_TEST_UTIL_HPP
#define FISHWEIGHT_TEST_UTIL_HPP

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace fishweight::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        m_path = std::filesystem::temp_directory_path()
               / ("fishweight-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(m_path);
        std::filesystem::create_directories(m_path);
    }
    ~TempDir() { std::filesystem::remove_all(m_path); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return m_path; }
    std::filesystem::path operator/(const std::string& name) const { return m_path / name; }

    std::filesystem::path write(const std::string& name, const std::string& contents) const
    {
        auto p = m_path / name;
        std::ofstream(p, std::ios::binary) << contents;
        return p;
    }

private:
    std::filesystem::path m_path;
};

inline std::string slurp(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs `binary args` through the shell, capturing stdout and stderr via
/// files in `scratch`.
inline RunResult run_command(const std::string& binary, const std::string& args, const TempDir& scratch)
{
    static std::atomic<int> counter{0};
    const int k = counter++;
    const auto out = scratch / ("stdout-" + std::to_string(k));
    const auto err = scratch / ("stderr-" + std::to_string(k));
    const std::string cmd = "'" + binary + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    std::filesystem::remove(out);
    std::filesystem::remove(err);
    return r;
}

} // namespace fishweight::testing

#endif

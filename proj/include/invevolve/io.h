#ifndef INVEVOLVE_IO_H_
#define INVEVOLVE_IO_H_

#include <filesystem>
#include <string>

namespace invevolve {

// Writes `<path>.tmp` and renames it over `path`, creating parent
// directories. Throws IoError naming the path.
void WriteFileAtomic(const std::filesystem::path& path, const std::string& content);

// Throws IoError naming the path.
std::string ReadFileText(const std::filesystem::path& path);

}  // namespace invevolve

#endif  // INVEVOLVE_IO_H_

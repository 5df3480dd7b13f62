#include "msdrec/model_file.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "msdrec/error.hpp"

namespace msdrec {

Json to_json(const ModelFile& file) {
    return Json{{"format_version", file.format_version},
                {"model", to_json(file.model)},
                {"selection_report", to_json(file.selection_report)},
                {"created_at", file.created_at}};
}

ModelFile model_file_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::ParseError, "model file must be a JSON object");
    for (const char* key : {"format_version", "model", "selection_report", "created_at"}) {
        if (!j.contains(key)) throw Error(ErrorKind::ParseError, std::string("model file is missing '") + key + "'");
    }
    if (!j["format_version"].is_number_integer() || j["format_version"].get<int>() != kModelFormatVersion) {
        throw Error(ErrorKind::SchemaError, "unsupported model format_version " + j["format_version"].dump());
    }
    if (!j["created_at"].is_string()) throw Error(ErrorKind::ParseError, "created_at must be a string");
    ModelFile file;
    file.model = model_from_json(j["model"]);
    file.selection_report = selection_report_from_json(j["selection_report"]);
    file.created_at = j["created_at"].get<std::string>();
    return file;
}

void save_model_file(const std::filesystem::path& path, const ModelFile& file) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for writing");
    out << canonical_dump(to_json(file)) << '\n';
    if (!out) throw Error(ErrorKind::IoError, "write failure on '" + path.string() + "'");
}

ModelFile load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "' for reading");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return model_file_from_json(parse_json(buffer.str()));
}

std::string utc_timestamp_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

}  // namespace msdrec

#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridgecond/ingest.hpp"

namespace ridgecond::cli {

inline constexpr const char* kToolName = "ridgecond";
inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every command's outputs. `args` holds
/// the command line without the output directory, so a run can be replayed
/// into any directory.
struct RunManifest {
    std::string tool = kToolName;
    std::string version = kToolVersion;
    std::string command;
    std::vector<std::string> args;
    std::string input;
    std::string input_sha256;
    std::string timestamp;
    std::map<std::string, std::string> parameters;
    std::vector<std::string> outputs;
};

inline std::string sha256_hex(const std::string& bytes)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), md, &len) != 1) {
        throw Error(ErrorKind::Io, "sha256 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline nlohmann::json to_json(const RunManifest& m)
{
    nlohmann::json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["command"] = m.command;
    j["args"] = m.args;
    j["input"] = m.input;
    j["input_sha256"] = m.input_sha256;
    j["timestamp"] = m.timestamp;
    for (const auto& [k, v] : m.parameters) j["param." + k] = v;
    j["outputs"] = m.outputs;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    RunManifest m;
    try {
        m.tool = j.at("tool").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.input = j.value("input", "");
        m.input_sha256 = j.value("input_sha256", "");
        m.timestamp = j.value("timestamp", "");
        m.outputs = j.value("outputs", std::vector<std::string>{});
        for (const auto& [k, v] : j.items()) {
            if (k.rfind("param.", 0) == 0) m.parameters[k.substr(6)] = v.get<std::string>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

inline void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

inline void write_manifest(const std::string& path, const RunManifest& m)
{
    write_text(path, to_json(m).dump(2) + "\n");
}

inline RunManifest read_manifest(const std::string& path)
{
    try {
        return manifest_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::InvalidInput, "cannot parse manifest '" + path + "': " + e.what());
    }
}

} // namespace ridgecond::cli

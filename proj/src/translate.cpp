#include "crisis/translate.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <sys/stat.h>

#include "crisis/common.hpp"
#include "crisis/io.hpp"
#include "crisis/lingfeat.hpp"

#ifndef CRISISXFER_NO_HTTP
#include "httplib.h"
#endif

namespace crisis {

// ---------------------------------------------------------------------------
// DictionaryTranslator
// ---------------------------------------------------------------------------

void DictionaryTranslator::load_pair(const std::string& source,
                                     const std::string& target,
                                     const std::string& csv_path) {
    Table table = read_csv(csv_path);
    int from_col = -1, to_col = -1;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "source_token") from_col = static_cast<int>(i);
        if (table.header[i] == "target_token") to_col = static_cast<int>(i);
    }
    if (from_col < 0 || to_col < 0) {
        throw std::runtime_error(concat("dictionary file ", csv_path,
                                        ": needs source_token and target_token columns"));
    }
    auto& dict = pairs_[{source, target}];
    for (const auto& row : table.rows) {
        dict.emplace(row[from_col], row[to_col]);
    }
}

void DictionaryTranslator::add_entry(const std::string& source, const std::string& target,
                                     const std::string& from_token,
                                     const std::string& to_token) {
    pairs_[{source, target}][from_token] = to_token;
}

std::string DictionaryTranslator::translate(const std::string& text,
                                            const std::string& source,
                                            const std::string& target) {
    if (source == target) return text;
    auto it = pairs_.find({source, target});
    const std::map<std::string, std::string>* dict =
        it == pairs_.end() ? nullptr : &it->second;
    std::vector<std::string> out;
    for (const std::string& tok : tokenize(text, TokenNorm::Placeholdered).tokens) {
        if (dict != nullptr) {
            auto hit = dict->find(tok);
            if (hit != dict->end()) {
                out.push_back(hit->second);
                continue;
            }
        }
        out.push_back(tok);
    }
    return join(out, " ");
}

// ---------------------------------------------------------------------------
// CachingTranslator
// ---------------------------------------------------------------------------

namespace {

bool file_exists(const std::string& path) {
    struct stat st{};
    return ::stat(path.c_str(), &st) == 0;
}

}  // namespace

std::string CachingTranslator::text_hash(const std::string& text) {
    return hex64(fnv1a64(text));
}

CachingTranslator::CachingTranslator(std::string cache_path,
                                     std::shared_ptr<TranslationClient> inner)
    : path_(std::move(cache_path)), inner_(std::move(inner)) {
    if (path_.empty() || !file_exists(path_)) return;
    for_each_jsonl(path_, [&](const json& record, std::size_t lineno) {
        if (!record.contains("text_hash") || !record.contains("source") ||
            !record.contains("target") || !record.contains("translation")) {
            throw std::runtime_error(concat("translation cache ", path_, " line ",
                                            lineno, ": incomplete record"));
        }
        cache_[{record.at("text_hash").get<std::string>(),
                record.at("source").get<std::string>(),
                record.at("target").get<std::string>()}] =
            record.at("translation").get<std::string>();
    });
}

std::string CachingTranslator::translate(const std::string& text,
                                         const std::string& source,
                                         const std::string& target) {
    if (source == target) return text;
    std::tuple<std::string, std::string, std::string> key{text_hash(text), source,
                                                          target};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    ++misses_;
    if (inner_ == nullptr) {
        throw std::runtime_error(concat("no cached translation for hash ",
                                        std::get<0>(key), " (", source, " -> ", target,
                                        ") and no inner client configured"));
    }
    std::string result = inner_->translate(text, source, target);
    cache_.emplace(key, result);
    if (!path_.empty()) {
        json record = {{"text_hash", std::get<0>(key)},
                       {"source", source},
                       {"target", target},
                       {"translation", result}};
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) {
            throw std::runtime_error(concat("cannot append to translation cache: ",
                                            path_));
        }
        out << record.dump() << "\n";
    }
    return result;
}

// ---------------------------------------------------------------------------
// HttpTranslator
// ---------------------------------------------------------------------------

HttpTranslator::HttpTranslator(std::string endpoint) : endpoint_(std::move(endpoint)) {
    if (endpoint_.empty()) {
        const char* env = std::getenv("CRISISXFER_TRANSLATE_ENDPOINT");
        if (env != nullptr) endpoint_ = env;
    }
}

std::string HttpTranslator::translate(const std::string& text, const std::string& source,
                                      const std::string& target) {
    if (source == target) return text;
#ifdef CRISISXFER_NO_HTTP
    throw std::runtime_error("HTTP translation support not built in");
#else
    if (endpoint_.empty()) {
        throw std::runtime_error(
            "no translation endpoint configured (set CRISISXFER_TRANSLATE_ENDPOINT)");
    }
    // Split "http://host[:port]/path".
    std::string rest = endpoint_;
    const std::string scheme = "http://";
    if (rest.rfind(scheme, 0) != 0) {
        throw std::runtime_error(concat("unsupported translation endpoint (http only): ",
                                        endpoint_));
    }
    rest = rest.substr(scheme.size());
    std::string host = rest;
    std::string request_path = "/";
    std::size_t slash = rest.find('/');
    if (slash != std::string::npos) {
        host = rest.substr(0, slash);
        request_path = rest.substr(slash);
    }
    int port = 80;
    std::size_t colon = host.find(':');
    if (colon != std::string::npos) {
        port = std::stoi(host.substr(colon + 1));
        host = host.substr(0, colon);
    }

    httplib::Client client(host, port);
    json body = {{"text", text}, {"source", source}, {"target", target}};
    httplib::Result res = client.Post(request_path, body.dump(), "application/json");
    if (!res) {
        throw std::runtime_error(concat("translation service unreachable: ", endpoint_));
    }
    if (res->status != 200) {
        throw std::runtime_error(concat("translation service error: ", res->status));
    }
    json reply = json::parse(res->body);
    if (!reply.contains("translation")) {
        throw std::runtime_error("translation service reply lacks a translation field");
    }
    return reply.at("translation").get<std::string>();
#endif
}

}  // namespace crisis

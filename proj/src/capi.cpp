#include "khoplab.h"

#include <cstring>
#include <memory>
#include <string>

#include "session.hpp"
#include "theory.hpp"

using namespace khop;

struct khop_session {
    std::unique_ptr<Session> impl;
    std::string last_error;
    std::string run_dir;
    khop_log_fn log_fn = nullptr;
    void* log_user = nullptr;
};

namespace {

thread_local std::string g_last_error;

khop_status code_of(const KhopError& e) {
    switch (e.code()) {
        case ErrorCode::invalid_argument: return KHOP_ERR_INVALID_ARGUMENT;
        case ErrorCode::config: return KHOP_ERR_CONFIG;
        case ErrorCode::io: return KHOP_ERR_IO;
        case ErrorCode::state: return KHOP_ERR_STATE;
        case ErrorCode::internal: return KHOP_ERR_INTERNAL;
    }
    return KHOP_ERR_INTERNAL;
}

template <typename F>
khop_status guarded(std::string* error_sink, F&& fn) {
    try {
        fn();
        return KHOP_OK;
    } catch (const KhopError& e) {
        if (error_sink) {
            *error_sink = e.what();
        }
        return code_of(e);
    } catch (const std::exception& e) {
        if (error_sink) {
            *error_sink = e.what();
        }
        return KHOP_ERR_INTERNAL;
    }
}

khop_status open_session(khop_session** out, const std::string& text, bool is_path) {
    if (out == nullptr) {
        g_last_error = "output handle pointer is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    *out = nullptr;
    auto handle = std::make_unique<khop_session>();
    const khop_status status = guarded(&g_last_error, [&]() {
        RunConfig cfg = is_path ? load_run_config(text) : parse_run_config(text);
        handle->impl = std::make_unique<Session>(std::move(cfg));
    });
    if (status == KHOP_OK) {
        *out = handle.release();
    }
    return status;
}

} // namespace

extern "C" {

const char* khop_version(void) {
    return "0.1.0";
}

const char* khop_status_name(khop_status status) {
    switch (status) {
        case KHOP_OK: return "ok";
        case KHOP_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case KHOP_ERR_CONFIG: return "config";
        case KHOP_ERR_IO: return "io";
        case KHOP_ERR_STATE: return "state";
        case KHOP_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* khop_last_error(void) {
    return g_last_error.c_str();
}

khop_status khop_session_open(const char* config_path, khop_session** out) {
    if (config_path == nullptr) {
        g_last_error = "config_path is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return open_session(out, config_path, /*is_path=*/true);
}

khop_status khop_session_open_text(const char* config_json, khop_session** out) {
    if (config_json == nullptr) {
        g_last_error = "config_json is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return open_session(out, config_json, /*is_path=*/false);
}

void khop_session_close(khop_session* session) {
    delete session;
}

const char* khop_session_error(const khop_session* session) {
    return session ? session->last_error.c_str() : "session is null";
}

khop_status khop_session_set(khop_session* session, const char* key, const char* value) {
    if (session == nullptr || key == nullptr || value == nullptr) {
        if (session) {
            session->last_error = "key/value is null";
        }
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return guarded(&session->last_error, [&]() {
        RunConfig& cfg = session->impl->config();
        const std::string k = key;
        const std::string v = value;
        if (k == "out") {
            cfg.out = v;
        } else if (k == "seed") {
            cfg.seed = std::stoull(v);
        } else if (k == "workers") {
            cfg.workers = std::stoi(v);
            require(cfg.workers >= 1, ErrorCode::invalid_argument, "workers must be >= 1");
        } else if (k == "resume") {
            cfg.resume = (v == "1" || v == "true");
        } else {
            fail(ErrorCode::invalid_argument, "unknown option '" + k + "'");
        }
    });
}

void khop_session_set_logger(khop_session* session, khop_log_fn fn, void* user) {
    if (session == nullptr) {
        return;
    }
    session->log_fn = fn;
    session->log_user = user;
    if (fn == nullptr) {
        session->impl->set_logger({});
    } else {
        session->impl->set_logger([session](const std::string& line) {
            session->log_fn(line.c_str(), session->log_user);
        });
    }
}

khop_status khop_session_run(khop_session* session, const char* subcommand) {
    if (session == nullptr) {
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    if (subcommand == nullptr) {
        session->last_error = "subcommand is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return guarded(&session->last_error, [&]() {
        session->run_dir = session->impl->run(subcommand).string();
    });
}

const char* khop_session_run_dir(khop_session* session, const char* subcommand) {
    if (session == nullptr || subcommand == nullptr) {
        return "";
    }
    const khop_status status = guarded(&session->last_error, [&]() {
        session->run_dir = session->impl->run_dir(subcommand).string();
    });
    return status == KHOP_OK ? session->run_dir.c_str() : "";
}

khop_status khop_fibonacci_count(uint32_t k, uint64_t* out) {
    if (out == nullptr) {
        g_last_error = "output pointer is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return guarded(&g_last_error, [&]() { *out = fib_count(static_cast<int>(k)); });
}

khop_status khop_depth_lower_bound(uint32_t k, uint32_t precision_bits, uint32_t d_model,
                                   uint32_t heads, uint64_t* num, uint64_t* den) {
    if (num == nullptr || den == nullptr) {
        g_last_error = "output pointer is null";
        return KHOP_ERR_INVALID_ARGUMENT;
    }
    return guarded(&g_last_error, [&]() {
        const Rational r = depth_lower_bound({static_cast<int>(k),
                                              static_cast<int>(precision_bits),
                                              static_cast<int>(d_model),
                                              static_cast<int>(heads)});
        *num = r.num;
        *den = r.den;
    });
}

} // extern "C"

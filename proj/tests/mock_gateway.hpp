#pragma once

// In-process stand-in for an IPFS HTTP API / Skynet portal. Stores uploads
// under a fake identifier and can be told to fail or corrupt.

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>

class MockGateway {
public:
    explicit MockGateway(std::string prefix = "")
        : prefix_(std::move(prefix))
    {
        server_.Post(prefix_ + "/api/v0/add", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admit(req, res)) {
                return;
            }
            const std::string id = store(req.get_file_value("file").content, "Qm");
            res.set_content(nlohmann::json{{"Name", "blob"}, {"Hash", id}, {"Size", "1"}}.dump(),
                            "application/json");
        });
        server_.Get(prefix_ + "/api/v0/cat", [this](const httplib::Request& req, httplib::Response& res) {
            serve(req.get_param_value("arg"), res);
        });
        server_.Post(prefix_ + "/skynet/skyfile", [this](const httplib::Request& req, httplib::Response& res) {
            if (!admit(req, res)) {
                return;
            }
            const std::string id = store(req.get_file_value("file").content, "sky");
            res.set_content(nlohmann::json{{"skylink", id}}.dump(), "application/json");
        });
        server_.Get(prefix_ + R"(/(sky\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            serve(req.matches[1], res);
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~MockGateway()
    {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + prefix_; }

    std::atomic<int> fail_status{0};     // answer uploads with this status when non-zero
    std::atomic<bool> corrupt{false};    // flip a byte on download
    std::string required_token;          // demand "Authorization: Bearer <token>"
    std::atomic<int> uploads{0};
    std::string last_auth;

private:
    bool admit(const httplib::Request& req, httplib::Response& res)
    {
        {
            std::lock_guard lock(mutex_);
            last_auth = req.get_header_value("Authorization");
        }
        if (!required_token.empty() && req.get_header_value("Authorization") != "Bearer " + required_token) {
            res.status = 401;
            return false;
        }
        if (int s = fail_status.load(); s != 0) {
            res.status = s;
            return false;
        }
        if (!req.has_file("file")) {
            res.status = 400;
            return false;
        }
        ++uploads;
        return true;
    }

    std::string store(const std::string& content, const std::string& prefix)
    {
        std::lock_guard lock(mutex_);
        std::string id = prefix + std::to_string(objects_.size() + 1000);
        objects_[id] = content;
        return id;
    }

    void serve(const std::string& id, httplib::Response& res)
    {
        std::lock_guard lock(mutex_);
        auto it = objects_.find(id);
        if (it == objects_.end()) {
            res.status = 404;
            return;
        }
        std::string body = it->second;
        if (corrupt && !body.empty()) {
            body[0] = static_cast<char>(body[0] ^ 0x5a);
        }
        res.set_content(body, "application/octet-stream");
    }

    std::string prefix_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::mutex mutex_;
    std::map<std::string, std::string> objects_;
};

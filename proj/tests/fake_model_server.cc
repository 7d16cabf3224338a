// Test double for the external model protocol.
//
//   fake_model_server [--backend stub|reference] [--candidate "tokens"]
//                     [--score S] [--reorder N] [--oversize N]
//                     [--garbage-after N] [--die-after N] [--error]
//                     [--listen PORT [--once]]
//
// Reads requests from stdin (or one TCP client at a time with --listen) and
// writes responses. --reorder holds up to N responses and releases them in
// reverse order, flushing whenever the input goes quiet.
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigeval/expr.h"
#include "sigeval/oracle.h"

using json = nlohmann::json;

namespace {

struct Options {
  std::string backend = "stub";
  std::vector<std::string> candidate = {"mul", "INT+", "2", "x"};
  double score = 0.25;
  std::size_t reorder = 1;
  std::size_t oversize = 0;
  long garbage_after = -1;
  long die_after = -1;
  bool error = false;
  int listen_port = -1;
  bool once = false;
};

class Server {
 public:
  Server(const Options& opt, int in_fd, int out_fd) : opt_(opt), in_(in_fd), out_(out_fd) {}

  // Returns false when the peer went away.
  bool run() {
    std::string buffer;
    char chunk[65536];
    for (;;) {
      pollfd pfd{in_, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, 50);
      if (ready == 0) {
        flush();
        continue;
      }
      const ssize_t n = ::read(in_, chunk, sizeof(chunk));
      if (n <= 0) {
        flush();
        return false;
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buffer.find('\n'); nl != std::string::npos; nl = buffer.find('\n', start)) {
        if (!handle(buffer.substr(start, nl - start))) return false;
        start = nl + 1;
      }
      buffer.erase(0, start);
    }
  }

 private:
  bool handle(const std::string& line) {
    ++seen_;
    if (opt_.die_after >= 0 && seen_ > opt_.die_after) std::_Exit(3);
    if (opt_.garbage_after >= 0 && seen_ > opt_.garbage_after) {
      emit("this is not json");
      return true;
    }
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object()) {
      queue({{"id", nullptr}, {"error", "request is not a JSON object"}});
      return true;
    }
    if (!req.contains("id") || !req["id"].is_string()) {
      queue({{"id", nullptr}, {"error", "request has no id"}});
      return true;
    }
    json resp = {{"id", req["id"]}};
    if (opt_.error) {
      resp["error"] = "backend failure";
    } else if (req.value("op", "") == "propose") {
      answer_propose(req, resp);
    } else if (req.value("op", "") == "score") {
      resp["candidates"] = json::array();
      resp["scores"] = json::array({opt_.score});
    } else {
      resp["error"] = "unknown op";
    }
    queue(std::move(resp));
    return true;
  }

  void answer_propose(const json& req, json& resp) {
    if (opt_.oversize > 0) {
      std::vector<std::string> big(opt_.oversize, "x");
      resp["candidates"] = json::array({json(big)});
      return;
    }
    if (opt_.backend == "reference") {
      resp["candidates"] = json::array();
      try {
        const auto tokens = req.at("prefix").get<std::vector<std::string>>();
        if (auto truth = sigeval::integrate_reference(sigeval::parse_prefix(tokens))) {
          resp["candidates"].push_back(sigeval::to_prefix(*truth));
        }
      } catch (const std::exception& e) {
        resp["error"] = e.what();
      }
      return;
    }
    resp["candidates"] = json::array({json(opt_.candidate)});
    resp["scores"] = json::array({opt_.score});
  }

  void queue(json resp) {
    held_.push_back(resp.dump());
    if (held_.size() >= opt_.reorder) flush();
  }

  void flush() {
    for (auto it = held_.rbegin(); it != held_.rend(); ++it) emit(*it);
    held_.clear();
  }

  void emit(const std::string& line) {
    const std::string buf = line + "\n";
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = ::write(out_, buf.data() + off, buf.size() - off);
      if (n <= 0) return;
      off += static_cast<std::size_t>(n);
    }
  }

  const Options& opt_;
  int in_;
  int out_;
  long seen_ = 0;
  std::vector<std::string> held_;
};

}  // namespace

int main(int argc, char** argv) {
  ::signal(SIGPIPE, SIG_IGN);
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::fprintf(stderr, "missing value for %s\n", a.c_str());
        std::exit(1);
      }
      return argv[++i];
    };
    if (a == "--backend") {
      opt.backend = next();
    } else if (a == "--candidate") {
      opt.candidate = sigeval::split_tokens(next());
    } else if (a == "--score") {
      opt.score = std::stod(next());
    } else if (a == "--reorder") {
      opt.reorder = std::stoul(next());
    } else if (a == "--oversize") {
      opt.oversize = std::stoul(next());
    } else if (a == "--garbage-after") {
      opt.garbage_after = std::stol(next());
    } else if (a == "--die-after") {
      opt.die_after = std::stol(next());
    } else if (a == "--error") {
      opt.error = true;
    } else if (a == "--listen") {
      opt.listen_port = std::stoi(next());
    } else if (a == "--once") {
      opt.once = true;
    } else {
      std::fprintf(stderr, "unknown flag %s\n", a.c_str());
      return 1;
    }
  }

  if (opt.listen_port < 0) {
    Server(opt, STDIN_FILENO, STDOUT_FILENO).run();
    return 0;
  }

  const int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  int yes = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(opt.listen_port));
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(lfd, 4) != 0) {
    std::perror("listen");
    return 1;
  }
  socklen_t len = sizeof(addr);
  ::getsockname(lfd, reinterpret_cast<sockaddr*>(&addr), &len);
  std::printf("PORT %d\n", ntohs(addr.sin_port));
  std::fflush(stdout);
  do {
    const int cfd = ::accept(lfd, nullptr, nullptr);
    if (cfd < 0) return 1;
    Server(opt, cfd, cfd).run();
    ::close(cfd);
  } while (!opt.once);
  return 0;
}

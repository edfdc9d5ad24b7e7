#pragma once

#include <string>
#include <vector>

#include "bpghunt/audit.hpp"

// Small builders for hand-written record fixtures.
namespace fx {

using namespace bpghunt;

inline EntityRef proc(const std::string& pid, const std::string& path) {
    auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    return {EntityKind::Process, {{"id", pid}, {"name", name}, {"path", path}}};
}
inline EntityRef file(const std::string& path) { return {EntityKind::File, {{"path", path}}}; }
inline EntityRef ip(const std::string& addr, const std::string& port = "") {
    EntityRef e{EntityKind::IP, {{"address", addr}}};
    if (!port.empty()) e.attributes["port"] = port;
    return e;
}
inline EntityRef user(const std::string& name, const std::string& privilege = "") {
    EntityRef e{EntityKind::User, {{"name", name}}};
    if (!privilege.empty()) e.attributes["privilege"] = privilege;
    return e;
}

inline LogRecord rec(std::int64_t ts, EntityRef s, RelationKind r, EntityRef o, const std::string& host = "h1") {
    return {ts, host, std::move(s), std::move(o), r};
}

}  // namespace fx

namespace fx {

// Mail client with two ordinary mail bursts around one burst that delivers a
// malicious archive, followed by the archive -> macro document -> dropper ->
// hollowed explorer -> registry/C&C chain.
struct MailFixture {
    std::vector<LogRecord> records;
    std::vector<std::size_t> attack;   // record indexes of the attack chain
    std::vector<std::size_t> mail1;    // first ordinary mail burst
    std::vector<std::size_t> mail2;    // second ordinary mail burst
};

inline MailFixture mail_fixture() {
    using R = RelationKind;
    constexpr std::int64_t s = 1'000'000;
    auto mail = proc("100", "C:\\Program Files\\Mail\\mailmaster.exe");
    auto winrar = proc("201", "C:\\Program Files\\WinRAR\\winrar.exe");
    auto winword = proc("202", "C:\\Office\\WINWORD.EXE");
    auto dropper = proc("203", "C:\\Users\\u\\AppData\\Local\\Temp\\t2.tmp");
    auto explorer = proc("204", "C:\\Windows\\explorer.exe");
    MailFixture f;
    auto add = [&](std::vector<std::size_t>& into, LogRecord r) {
        into.push_back(f.records.size());
        f.records.push_back(std::move(r));
    };
    add(f.mail1, rec(1 * s, mail, R::Connect, ip("10.0.0.5", "993")));
    add(f.mail1, rec(1 * s + 1000, mail, R::Write, file("C:\\mail\\store\\msg001.eml")));
    add(f.mail1, rec(1 * s + 2000, mail, R::Write, file("C:\\mail\\store\\msg002.eml")));

    const std::int64_t t = 3600 * s;
    add(f.attack, rec(t, mail, R::Connect, ip("10.0.0.5", "993")));
    add(f.attack, rec(t + 1000, mail, R::Write, file("D:\\download\\invoice.zip")));
    add(f.attack, rec(t + 2000, mail, R::Create, winrar));
    add(f.attack, rec(t + 3 * s, winrar, R::Read, file("D:\\download\\invoice.zip")));
    add(f.attack, rec(t + 4 * s, winrar, R::Write, file("D:\\download\\report.doc")));
    add(f.attack, rec(t + 9 * s, winword, R::Read, file("D:\\download\\report.doc")));
    add(f.attack, rec(t + 10 * s, winword, R::Write, file("C:\\Users\\u\\AppData\\Local\\Temp\\t2.tmp")));
    add(f.attack, rec(t + 11 * s, winword, R::ExecuteFile, file("C:\\Users\\u\\AppData\\Local\\Temp\\t2.tmp")));
    add(f.attack, rec(t + 11 * s + 10, winword, R::Create, dropper));
    add(f.attack, rec(t + 12 * s, dropper, R::Create, explorer));
    add(f.attack, rec(t + 13 * s, explorer, R::Read, file("HKLM\\SAM\\SAM\\Domains\\Account")));
    add(f.attack, rec(t + 14 * s, explorer, R::Connect, ip("203.0.113.66", "8080")));
    add(f.attack, rec(t + 15 * s, explorer, R::Connect, ip("203.0.113.66", "8080")));

    const std::int64_t u = 7200 * s;
    add(f.mail2, rec(u, mail, R::Read, file("C:\\mail\\drafts\\reply.eml")));
    add(f.mail2, rec(u + 1000, mail, R::Connect, ip("10.0.0.9", "25")));
    add(f.mail2, rec(u + 2000, mail, R::Write, file("C:\\mail\\store\\sent001.eml")));
    return f;
}

}  // namespace fx

#include "siamhan/ingest.hpp"

#include "byte_reader.hpp"

#include <map>

namespace siamhan {

namespace {

using detail::ByteReader;

[[noreturn]] void malformed(const std::string& what) {
    throw IngestError(IngestErrc::malformed_record, "certificate: " + what);
}

struct Tlv {
    std::uint8_t tag;
    ByteView value;
    ByteView whole;
};

Tlv read_tlv(ByteReader& in, ByteView base, std::size_t base_remaining) {
    Tlv t{};
    std::size_t start = base.size() - base_remaining;
    t.tag = in.u8();
    if ((t.tag & 0x1f) == 0x1f) {
        malformed("high tag numbers are not supported");
    }
    std::size_t len = in.u8();
    if (len == 0x80) {
        malformed("indefinite length");
    }
    if (len & 0x80) {
        int n = static_cast<int>(len & 0x7f);
        if (n > 4) {
            malformed("length of length exceeds 4 bytes");
        }
        len = 0;
        for (int i = 0; i < n; ++i) {
            len = (len << 8) | in.u8();
        }
    }
    t.value = in.take(len);
    std::size_t end = base.size() - in.remaining();
    t.whole = base.subspan(start, end - start);
    return t;
}

// Reader that remembers its backing span so whole-TLV views can be recovered.
class DerReader {
public:
    explicit DerReader(ByteView data) : data_(data), in_(data) {}

    bool empty() const { return in_.empty(); }

    Tlv next() { return read_tlv(in_, data_, in_.remaining()); }

    Tlv expect(std::uint8_t tag, const char* what) {
        Tlv t = next();
        if (t.tag != tag) {
            malformed(std::string("expected ") + what);
        }
        return t;
    }

private:
    ByteView data_;
    ByteReader in_;
};

std::string decode_oid(ByteView v) {
    if (v.empty()) {
        malformed("empty object identifier");
    }
    std::vector<std::uint64_t> arcs;
    std::uint64_t cur = 0;
    bool pending = false;
    for (auto b : v) {
        if (cur > (std::uint64_t{1} << 56)) {
            malformed("object identifier arc overflow");
        }
        cur = (cur << 7) | (b & 0x7f);
        pending = true;
        if (!(b & 0x80)) {
            arcs.push_back(cur);
            cur = 0;
            pending = false;
        }
    }
    if (pending) {
        malformed("truncated object identifier");
    }
    std::string out;
    std::uint64_t first = arcs[0];
    if (first < 40) {
        out = "0." + std::to_string(first);
    } else if (first < 80) {
        out = "1." + std::to_string(first - 40);
    } else {
        out = "2." + std::to_string(first - 80);
    }
    for (std::size_t i = 1; i < arcs.size(); ++i) {
        out += '.';
        out += std::to_string(arcs[i]);
    }
    return out;
}

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

std::string hex_tlv(ByteView whole) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out = "#";
    for (auto b : whole) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

std::string decode_string(const Tlv& t) {
    std::string out;
    switch (t.tag) {
    case 0x0c:  // UTF8String
    case 0x12:  // NumericString
    case 0x13:  // PrintableString
    case 0x16:  // IA5String
    case 0x1a:  // VisibleString
        out.assign(t.value.begin(), t.value.end());
        return out;
    case 0x14:  // T61String, read as Latin-1
        for (auto b : t.value) {
            append_utf8(out, b);
        }
        return out;
    case 0x1e:  // BMPString
        if (t.value.size() % 2 != 0) {
            malformed("odd-length BMPString");
        }
        for (std::size_t i = 0; i < t.value.size(); i += 2) {
            append_utf8(out, (std::uint32_t{t.value[i]} << 8) | t.value[i + 1]);
        }
        return out;
    case 0x1c:  // UniversalString
        if (t.value.size() % 4 != 0) {
            malformed("UniversalString length not a multiple of 4");
        }
        for (std::size_t i = 0; i < t.value.size(); i += 4) {
            std::uint32_t cp = (std::uint32_t{t.value[i]} << 24) | (std::uint32_t{t.value[i + 1]} << 16) |
                               (std::uint32_t{t.value[i + 2]} << 8) | t.value[i + 3];
            if (cp > 0x10ffff) {
                malformed("code point out of range");
            }
            append_utf8(out, cp);
        }
        return out;
    default:
        return hex_tlv(t.whole);
    }
}

const std::map<std::string, std::string>& attribute_names() {
    static const std::map<std::string, std::string> names = {
        {"2.5.4.3", "CN"},
        {"2.5.4.4", "SN"},
        {"2.5.4.5", "serialNumber"},
        {"2.5.4.6", "C"},
        {"2.5.4.7", "L"},
        {"2.5.4.8", "ST"},
        {"2.5.4.9", "street"},
        {"2.5.4.10", "O"},
        {"2.5.4.11", "OU"},
        {"2.5.4.12", "title"},
        {"2.5.4.15", "businessCategory"},
        {"2.5.4.17", "postalCode"},
        {"2.5.4.42", "GN"},
        {"2.5.4.43", "initials"},
        {"2.5.4.46", "dnQualifier"},
        {"2.5.4.97", "organizationIdentifier"},
        {"1.2.840.113549.1.9.1", "emailAddress"},
        {"0.9.2342.19200300.100.1.1", "UID"},
        {"0.9.2342.19200300.100.1.25", "DC"},
        {"1.3.6.1.4.1.311.60.2.1.1", "jurisdictionL"},
        {"1.3.6.1.4.1.311.60.2.1.2", "jurisdictionST"},
        {"1.3.6.1.4.1.311.60.2.1.3", "jurisdictionC"},
    };
    return names;
}

std::string render_name(const Tlv& name) {
    std::string out;
    DerReader rdns(name.value);
    while (!rdns.empty()) {
        Tlv rdn = rdns.expect(0x31, "RelativeDistinguishedName SET");
        DerReader atvs(rdn.value);
        while (!atvs.empty()) {
            Tlv atv = atvs.expect(0x30, "AttributeTypeAndValue SEQUENCE");
            DerReader fields(atv.value);
            std::string oid = decode_oid(fields.expect(0x06, "attribute type OID").value);
            Tlv value = fields.next();
            if (!fields.empty()) {
                malformed("trailing data in AttributeTypeAndValue");
            }
            auto it = attribute_names().find(oid);
            if (!out.empty()) {
                out += ", ";
            }
            out += it != attribute_names().end() ? it->second : oid;
            out += '=';
            out += decode_string(value);
        }
    }
    return out;
}

} // namespace

CertificateInfo parse_der_certificate(ByteView der) {
    DerReader top(der);
    Tlv cert = top.expect(0x30, "Certificate SEQUENCE");
    DerReader cert_fields(cert.value);
    Tlv tbs = cert_fields.expect(0x30, "TBSCertificate SEQUENCE");

    DerReader fields(tbs.value);
    Tlv t = fields.next();
    if (t.tag == 0xa0) {  // explicit version
        t = fields.next();
    }
    if (t.tag != 0x02) {
        malformed("expected serial number INTEGER");
    }
    Tlv alg = fields.expect(0x30, "signature AlgorithmIdentifier");
    DerReader alg_fields(alg.value);

    CertificateInfo info;
    info.algorithm_id = decode_oid(alg_fields.expect(0x06, "algorithm OID").value);
    info.issuer = render_name(fields.expect(0x30, "issuer Name"));
    fields.expect(0x30, "Validity SEQUENCE");
    info.subject = render_name(fields.expect(0x30, "subject Name"));
    return info;
}

} // namespace siamhan

#include "sonarflow/version.hpp"

#include <fftw3.h>
#include <openssl/crypto.h>
#include <png.h>

namespace sonarflow {

std::string_view version() { return SONARFLOW_VERSION; }

std::vector<std::pair<std::string, std::string>> dependency_versions() {
    return {{"fftw", fftw_version},
            {"libpng", png_get_libpng_ver(nullptr)},
            {"openssl", OpenSSL_version(OPENSSL_VERSION)}};
}

}  // namespace sonarflow

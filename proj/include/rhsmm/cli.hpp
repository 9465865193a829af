#pragma once
namespace rhsmm { int cli_dispatch(int argc, char** argv); }

//! GKP codewords, Steane error correction, and encoded stabilizer recovery.

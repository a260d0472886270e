# Catalog entries and phrase banks shared by the corpus generator.

TOP50 = [
    ("T1059.003", "Windows Command Shell", ["cmd shell"]),
    ("T1105", "Ingress Tool Transfer", []),
    ("T1070.004", "File Deletion", []),
    ("T1027", "Obfuscated Files or Information", []),
    ("T1082", "System Information Discovery", []),
    ("T1071.001", "Web Protocols", []),
    ("T1057", "Process Discovery", ["process enumeration"]),
    ("T1083", "File and Directory Discovery", []),
    ("T1566.001", "Spearphishing Attachment", ["spear phishing attachment"]),
    ("T1547.001", "Registry Run Keys / Startup Folder", []),
    ("T1055", "Process Injection", []),
    ("T1204.002", "Malicious File", []),
    ("T1033", "System Owner/User Discovery", []),
    ("T1016", "System Network Configuration Discovery", []),
    ("T1053.005", "Scheduled Task", []),
    ("T1140", "Deobfuscate/Decode Files or Information", []),
    ("T1112", "Modify Registry", []),
    ("T1036.005", "Match Legitimate Name or Location", []),
    ("T1113", "Screen Capture", []),
    ("T1003.001", "LSASS Memory", []),
    ("T1005", "Data from Local System", []),
    ("T1012", "Query Registry", []),
    ("T1047", "Windows Management Instrumentation", ["WMI"]),
    ("T1106", "Native API", []),
    ("T1041", "Exfiltration Over C2 Channel", []),
    ("T1078", "Valid Accounts", []),
    ("T1021.001", "Remote Desktop Protocol", ["RDP"]),
    ("T1543.003", "Windows Service", []),
    ("T1218.011", "Rundll32", []),
    ("T1573.001", "Symmetric Cryptography", []),
    ("T1056.001", "Keylogging", ["keystroke logging"]),
    ("T1562.001", "Disable or Modify Tools", []),
    ("T1074.001", "Local Data Staging", []),
    ("T1518.001", "Security Software Discovery", []),
    ("T1569.002", "Service Execution", []),
    ("T1090", "Proxy", []),
    ("T1095", "Non-Application Layer Protocol", []),
    ("T1190", "Exploit Public-Facing Application", []),
    ("T1574.002", "DLL Side-Loading", []),
    ("T1564.001", "Hidden Files and Directories", []),
    ("T1548.002", "Bypass User Account Control", []),
    ("T1110", "Brute Force", []),
    ("T1552.001", "Credentials In Files", []),
    ("T1219", "Remote Access Software", []),
    ("T1068", "Exploitation for Privilege Escalation", []),
    ("T1210", "Exploitation of Remote Services", []),
    ("T1072", "Software Deployment Tools", []),
    ("T1570", "Lateral Tool Transfer", []),
    ("T1484.001", "Group Policy Modification", []),
    ("T1557.001", "LLMNR/NBT-NS Poisoning and SMB Relay", []),
]

EXTRAS = [
    ("T1566", "Phishing", []),
    ("T1059", "Command and Scripting Interpreter", []),
    ("T1059.001", "PowerShell", []),
    ("T1486", "Data Encrypted for Impact", []),
    ("T1003", "OS Credential Dumping", []),
    ("T1021.002", "SMB/Windows Admin Shares", []),
    ("T1560.001", "Archive via Utility", []),
    ("T1071", "Application Layer Protocol", []),
    ("T1204", "User Execution", []),
    ("T1036", "Masquerading", []),
    ("T1053", "Scheduled Task/Job", []),
    ("T1070", "Indicator Removal", []),
    ("T1056", "Input Capture", []),
    ("T1547", "Boot or Logon Autostart Execution", []),
    ("T1018", "Remote System Discovery", []),
    ("T1087", "Account Discovery", []),
    ("T1135", "Network Share Discovery", []),
    ("T1069", "Permission Groups Discovery", []),
    ("T1007", "System Service Discovery", []),
    ("T1049", "System Network Connections Discovery", []),
    ("T1102", "Web Service", []),
    ("T1566.002", "Spearphishing Link", []),
    ("T1059.005", "Visual Basic", []),
    ("T1059.007", "JavaScript", []),
    ("T1027.002", "Software Packing", []),
    ("T1055.012", "Process Hollowing", []),
    ("T1021.004", "SSH", []),
    ("T1134", "Access Token Manipulation", []),
    ("T1497", "Virtualization/Sandbox Evasion", []),
    ("T1583.001", "Domains", []),
]

# Past-tense predicate clauses; {host} is filled per sentence.
CLAUSES = {
    "T1059.003": [
        "ran batch commands through cmd.exe on {host}",
        "launched cmd.exe /c to execute a chain of shell commands",
        "used the Windows command prompt to run reconnaissance one-liners",
        "spawned an interactive command shell from the implant on {host}",
        "executed a batch script with cmd.exe to stage the next payload",
        "relied on cmd.exe to chain several system utilities together",
    ],
    "T1105": [
        "downloaded additional tooling from the command server to {host}",
        "pulled a second-stage payload with certutil",
        "fetched new modules over HTTP and wrote them to disk",
        "transferred a credential dumper from external infrastructure onto {host}",
        "used bitsadmin to retrieve a remote binary",
    ],
    "T1070.004": [
        "deleted the dropper from disk after execution on {host}",
        "removed staged archives with del /f /q to cover its tracks",
        "wiped its own binary once the payload was installed",
        "erased the temporary tool folder from {host} before leaving",
        "securely deleted log exports and leftover scripts",
        "cleaned up dropped files using sdelete",
    ],
    "T1027": [
        "packed the loader with a custom XOR routine",
        "base64 encoded its configuration to hinder analysis",
        "stored strings in an encrypted blob inside the binary",
        "obfuscated the script with junk variables and string splitting",
    ],
    "T1082": [
        "collected the operating system version and hostname from {host}",
        "ran systeminfo to profile the victim machine",
        "gathered hardware details and the installed patch level",
        "queried the computer name, architecture and locale",
    ],
    "T1071.001": [
        "communicated with its controller over HTTPS requests",
        "beaconed to the command server using HTTP POST messages",
        "hid tasking inside ordinary web traffic",
        "sent results back in HTTP cookies to a remote web server",
    ],
    "T1057": [
        "enumerated running processes with tasklist on {host}",
        "listed active processes to look for analysis tools",
        "walked the process list through CreateToolhelp32Snapshot",
        "checked which processes were running before injecting code",
        "collected the process list and sent it to the controller",
        "queried running processes to find the point-of-sale application",
    ],
    "T1083": [
        "enumerated directories on {host} looking for documents",
        "searched the file system for spreadsheets and archives",
        "listed folder contents with dir /s",
        "walked user profile folders to locate sensitive files",
    ],
    "T1566.001": [
        "sent spearphishing emails with a weaponized Word attachment",
        "delivered a malicious RTF document as an email attachment",
        "emailed victims a booby-trapped invoice document",
        "attached a macro-enabled spreadsheet to targeted emails",
        "lured employees with a resume attachment carrying a macro",
        "mailed a password-protected archive attachment to staff",
    ],
    "T1547.001": [
        "added a Run key so the implant started at logon",
        "placed a shortcut in the Startup folder on {host}",
        "created a registry Run entry pointing to the loader",
        "persisted by writing to the CurrentVersion Run key",
    ],
    "T1055": [
        "injected shellcode into a running explorer process",
        "wrote its payload into the memory of a trusted process",
        "used CreateRemoteThread to run code inside another process",
        "injected a DLL into svchost on {host}",
    ],
    "T1204.002": [
        "relied on victims opening the document and enabling macros",
        "needed the user to double-click the attached file",
        "waited for recipients to launch the lure executable",
        "depended on staff opening the weaponized attachment",
    ],
    "T1033": [
        "ran whoami to identify the current user on {host}",
        "collected the logged-on username and domain",
        "queried the owner of the session before escalating",
        "recorded which account the implant was running under",
    ],
    "T1016": [
        "ran ipconfig /all to map network interfaces",
        "collected the IP configuration and DNS servers of {host}",
        "enumerated network adapters and routing tables",
        "gathered the local subnet and gateway details",
    ],
    "T1053.005": [
        "created a scheduled task with schtasks to relaunch the payload",
        "registered a daily scheduled task on {host}",
        "used schtasks to run the backdoor every hour",
        "set up a task that executed the loader at system start",
    ],
    "T1140": [
        "decoded the embedded payload at runtime",
        "used certutil -decode to rebuild the executable",
        "decrypted its second stage in memory before running it",
        "unpacked a base64 blob into a working DLL",
    ],
    "T1112": [
        "modified registry values to store its configuration",
        "changed registry settings on {host} to weaken defenses",
        "wrote encrypted settings into a custom registry key",
        "altered registry entries with reg add",
    ],
    "T1036.005": [
        "named its binary svchost.exe and placed it in a system folder",
        "dropped files with names mimicking legitimate software updates",
        "stored the implant in a folder that imitated a vendor directory",
        "disguised the backdoor as a Windows Defender component",
    ],
    "T1113": [
        "captured screenshots of the victim desktop",
        "took periodic screen grabs on {host}",
        "recorded images of the screen while operators worked",
        "used a plugin to capture the display every few seconds",
    ],
    "T1003.001": [
        "dumped LSASS memory with procdump on {host}",
        "used Mimikatz to read credentials from lsass.exe",
        "created a minidump of the LSASS process",
        "extracted password hashes from LSASS memory",
    ],
    "T1005": [
        "collected documents from the local drive of {host}",
        "gathered files of interest from local disks",
        "copied local databases and configuration files",
        "harvested browser data stored on the workstation",
    ],
    "T1012": [
        "queried the registry for installed software",
        "read registry keys to learn proxy settings",
        "used reg query to inspect values on {host}",
        "checked registry entries for virtualization artifacts",
    ],
    "T1047": [
        "used WMI to execute commands on {host}",
        "ran wmic process call create to start payloads",
        "queried system details through Windows Management Instrumentation",
        "leveraged WMI event subscriptions to launch code",
    ],
    "T1106": [
        "called Windows API functions directly to start processes",
        "used native API calls such as VirtualAlloc and CreateProcess",
        "resolved API functions dynamically to avoid static imports",
        "invoked NtCreateThreadEx from its loader",
    ],
    "T1041": [
        "exfiltrated stolen data over the existing command channel",
        "sent archives back through the same C2 connection",
        "uploaded collected files to the controller over its beacon",
        "streamed harvested data through the implant channel",
    ],
    "T1078": [
        "logged in with stolen domain credentials on {host}",
        "reused legitimate administrator accounts to move around",
        "authenticated to the VPN with valid employee credentials",
        "operated through a compromised service account",
    ],
    "T1021.001": [
        "moved laterally over Remote Desktop to {host}",
        "used RDP sessions to reach additional servers",
        "connected to the jump box through Remote Desktop",
        "tunneled RDP traffic to access internal hosts",
    ],
    "T1543.003": [
        "installed a new Windows service to run the backdoor",
        "created a service with sc create on {host}",
        "registered a malicious service that started automatically",
        "replaced the binary path of an existing service",
    ],
    "T1218.011": [
        "executed its DLL through rundll32.exe",
        "launched the payload with rundll32 and an exported function",
        "proxied execution of the loader via rundll32 on {host}",
        "called rundll32 to run the malicious library",
    ],
    "T1573.001": [
        "encrypted command traffic with a hardcoded RC4 key",
        "protected C2 messages with AES encryption",
        "wrapped its beacon in a symmetric cipher",
        "used a static XOR key to encrypt network traffic",
    ],
    "T1056.001": [
        "logged keystrokes to capture passwords on {host}",
        "installed a keylogger to record everything typed",
        "captured keyboard input with a hooking module",
        "recorded user keystrokes and saved them to a hidden file",
        "deployed a keystroke recorder against finance staff",
    ],
    "T1562.001": [
        "disabled antivirus services on {host}",
        "tampered with endpoint protection before deploying tools",
        "stopped security agents with taskkill",
        "turned off Windows Defender real-time monitoring",
    ],
    "T1074.001": [
        "staged collected files in a temporary folder on {host}",
        "gathered loot into a single local directory before exfiltration",
        "copied stolen documents into a staging folder",
        "compressed collected data in the recycle bin folder",
    ],
    "T1518.001": [
        "checked for installed antivirus products",
        "enumerated security software running on {host}",
        "queried which endpoint protection agent was present",
        "looked for sandbox and security tooling before executing",
    ],
    "T1569.002": [
        "executed payloads remotely with PsExec",
        "started its binary through the service control manager",
        "ran commands by creating and starting a temporary service on {host}",
        "used sc start to launch the implant",
    ],
    "T1090": [
        "routed traffic through a chain of compromised proxies",
        "used an internal host as a relay for outbound traffic",
        "proxied connections through {host} to reach the internet",
        "hid its servers behind a proxy network",
    ],
    "T1095": [
        "used a raw TCP protocol for command traffic",
        "communicated over a custom binary protocol",
        "sent beacons over ICMP packets",
        "talked to its server over plain sockets on a high port",
    ],
    "T1190": [
        "exploited a vulnerable web server to gain entry",
        "compromised an internet-facing VPN appliance",
        "abused a flaw in a public web application",
        "gained initial access through an unpatched Exchange server",
    ],
    "T1574.002": [
        "side-loaded a malicious DLL next to a signed executable",
        "placed a rogue DLL beside a legitimate application on {host}",
        "abused a trusted binary to load its library",
        "hijacked the DLL search order of a signed tool",
    ],
    "T1564.001": [
        "set the hidden attribute on its working directory",
        "stored tools in a hidden folder on {host}",
        "used attrib +h to conceal dropped files",
        "kept the payload in a hidden system directory",
    ],
    "T1548.002": [
        "bypassed User Account Control with fodhelper",
        "elevated privileges through a UAC bypass on {host}",
        "abused eventvwr to skip the UAC prompt",
        "used an auto-elevating binary to evade UAC",
    ],
    "T1110": [
        "guessed passwords against exposed services",
        "ran a password spraying campaign against webmail",
        "brute forced local administrator passwords on {host}",
        "tried thousands of credentials against the VPN portal",
    ],
    "T1552.001": [
        "searched configuration files for plaintext passwords",
        "found credentials stored in scripts on {host}",
        "harvested passwords from unattended installation files",
        "read stored passwords from text files on file shares",
    ],
    "T1219": [
        "installed a commercial remote access tool",
        "used AnyDesk to control {host}",
        "deployed TeamViewer for interactive access",
        "relied on a legitimate remote support application",
    ],
    "T1068": [
        "exploited a kernel vulnerability to gain SYSTEM",
        "escalated privileges with a public driver exploit on {host}",
        "abused a local privilege escalation bug",
        "used an elevation exploit against an unpatched host",
    ],
    "T1210": [
        "exploited SMB vulnerabilities to reach other hosts",
        "abused a flaw in a remote service to spread to {host}",
        "used an EternalBlue exploit against internal servers",
        "compromised internal systems through a vulnerable remote service",
    ],
    "T1072": [
        "pushed its payload through the software deployment console",
        "abused the SCCM server to distribute malware",
        "used the patch management system to run code on {host}",
        "deployed tools through a centralized management agent",
    ],
    "T1570": [
        "copied its tools to {host} over SMB shares",
        "moved the payload between internal hosts with copy commands",
        "transferred utilities laterally to the next server",
        "staged binaries on admin shares before executing them remotely",
        "pushed the implant to neighboring machines over the network",
    ],
    "T1484.001": [
        "modified Group Policy to deploy a scheduled script",
        "changed a domain GPO to push malware",
        "edited group policy objects on the domain controller",
        "abused Group Policy to disable security settings",
    ],
    "T1557.001": [
        "poisoned LLMNR responses to capture hashes",
        "ran Responder to relay SMB authentication",
        "intercepted NBT-NS queries on the local network",
        "relayed captured NTLM challenges to {host}",
    ],
    "T1059.001": [
        "ran encoded PowerShell commands on {host}",
        "used PowerShell scripts to download modules",
        "executed a PowerShell one-liner to load the backdoor",
    ],
    "T1486": [
        "encrypted files across the network for ransom",
        "deployed ransomware that locked the file servers",
        "encrypted data on {host} and left a ransom note",
    ],
    "T1560.001": [
        "compressed stolen data with WinRAR",
        "archived collected files with 7-Zip before exfiltration",
        "used rar.exe to split loot into password protected archives",
    ],
}

FILLER = [
    "The campaign was first observed in early {season}.",
    "Victims included retailers and hospitality firms.",
    "Our analysis draws on several incident response engagements.",
    "The group appears to be financially motivated.",
    "Infrastructure overlapped with earlier activity from the same cluster.",
    "Attribution is made with moderate confidence.",
    "Several organizations in the region reported similar intrusions.",
    "The operators worked mostly during business hours in their time zone.",
    "We continue to track this activity and will update the report.",
    "Defenders should review the detection guidance at the end of this report.",
    "The intrusion lasted roughly {weeks} weeks before it was contained.",
    "Multiple subsidiaries of the victim were affected.",
    "The threat actor has been active since at least {year}.",
    "Targets were concentrated in the financial sector.",
    "This report summarizes the activity for network defenders.",
    "The malware family has evolved over several versions.",
    "Tooling was a mix of custom and publicly available utilities.",
    "The team responded within hours of the first alert.",
]

SEASONS = ["spring", "summer", "autumn", "winter"]
